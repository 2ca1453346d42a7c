#include <stdio.h>

int main(void)
{
    int n = 27, steps = 0;
    do {
        if (n % 2 == 0)
            n /= 2;
        else
            n = 3 * n + 1;
        steps++;
    } while (n != 1 && steps < 200);

    switch (steps % 3) {
    case 0:
        if (steps > 10) {
            printf("long\n");
        }
        break;
    default:
        printf("steps=%d\n", steps);
        break;
    }
    while (steps > 0)
        if (steps-- == 1)
            printf("done\n");
    return 0;
}
