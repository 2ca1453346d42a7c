#include <stdio.h>

/* A file with no if statements at all: loops and calls only. */
int main(void)
{
    int total = 0;
    for (int i = 0; i < 10; i++) {
        total += i * i;
    }
    while (total > 100)
        total -= 7;
    printf("%d\n", total);
    return 0;
}
