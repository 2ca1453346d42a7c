#include <stdio.h>
#define LIMIT 10
#define CHECK(v) if ((v) > LIMIT) { puts("over"); }
#ifdef VERBOSE
#define LOGIF(c) if (c) puts("hit")
#endif

int main(void)
{
    int v = 12;
    if (v > LIMIT) {
        printf("over by %d\n", v - LIMIT);
    }
#ifndef QUIET
    if (v == 12)
        printf("exact\n");
#endif
    return 0;
}
