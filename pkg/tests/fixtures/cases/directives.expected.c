#include <stdio.h>
#define LIMIT 10
#define CHECK(v) if ((v) > LIMIT) { puts("over"); }
#ifdef VERBOSE
#define LOGIF(c) if (c) puts("hit")
#endif

int main(void)
{
    int v = 12;
    if (((v > LIMIT) ^ (__bfa_log(1) && (__bfa_flip_id() == 1)))) {
        printf("over by %d\n", v - LIMIT);
    }
#ifndef QUIET
    if (((v == 12) ^ (__bfa_log(2) && (__bfa_flip_id() == 2))))
        printf("exact\n");
#endif
    return 0;
}
