#include <stdio.h>

static int gift = 3;
static int ifdef_count = 0;
static int notif(int x) { return x + 1; }

int main(void)
{
    int if_total = gift + notif(2);
    ifdef_count++;
    if (((if_total > 5) ^ (__bfa_log(1) && (__bfa_flip_id() == 1)))) {
        printf("%d %d\n", if_total, ifdef_count);
    }
    return 0;
}
