#include <stdio.h>
#include <string.h>

static int clamp(int v, int lo, int hi)
{
    if (v < lo) {
        return lo;
    }
    if (v > hi) {
        return hi;
    }
    return v;
}

int main(void)
{
    char buf[32];
    strcpy(buf, "abc");
    if (clamp(strlen(buf), 1, 2) == 2) {
        printf("clamped\n");
    }
    if (memcmp(buf, "abc", (size_t)(1 + 2)) == 0) {
        printf("equal\n");
    }
    return 0;
}
