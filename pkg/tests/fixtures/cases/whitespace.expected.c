#include <stdio.h>

int main(void)
{
    int x = 2;
    if
        (((x == 2) ^ (__bfa_log(1) && (__bfa_flip_id() == 1))))
    {
        printf("split\n");
    }
    if	(((x	<	5) ^ (__bfa_log(2) && (__bfa_flip_id() == 2)))) {
        printf("tabs\n");
    }
    if (((x +
        1 >
        2) ^ (__bfa_log(3) && (__bfa_flip_id() == 3)))) {
        printf("wrapped condition\n");
    }
    return 0;
}
