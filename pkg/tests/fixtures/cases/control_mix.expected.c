#include <stdio.h>

int main(void)
{
    int n = 27, steps = 0;
    do {
        if (((n % 2 == 0) ^ (__bfa_log(1) && (__bfa_flip_id() == 1))))
            n /= 2;
        else
            n = 3 * n + 1;
        steps++;
    } while (n != 1 && steps < 200);

    switch (steps % 3) {
    case 0:
        if (((steps > 10) ^ (__bfa_log(2) && (__bfa_flip_id() == 2)))) {
            printf("long\n");
        }
        break;
    default:
        printf("steps=%d\n", steps);
        break;
    }
    while (steps > 0)
        if (((steps-- == 1) ^ (__bfa_log(3) && (__bfa_flip_id() == 3))))
            printf("done\n");
    return 0;
}
