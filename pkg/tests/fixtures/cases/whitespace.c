#include <stdio.h>

int main(void)
{
    int x = 2;
    if
        (x == 2)
    {
        printf("split\n");
    }
    if	(x	<	5) {
        printf("tabs\n");
    }
    if (x +
        1 >
        2) {
        printf("wrapped condition\n");
    }
    return 0;
}
