#include <stdio.h>

/* Only the first physical line of a directive is invisible to the
   rewriter, so the if inside this macro body is a flip site. Flipping
   it affects every expansion of the macro. */
#define WARN_IF_BIG(x) \
    if ((x) > 3) {     \
        puts("big");   \
    }

int main(void)
{
    const char *s = "split \
string";
    int v = 5;
    WARN_IF_BIG(v)
    if (s[0] == 's')
        printf("ok\n");
    return 0;
}
