#include <stdio.h>

/* if (this_is_commented_out) should never be rewritten */
// if (and_neither_should_this) { }

int main(void)
{
    int n = 7;
    /* a block comment may sit between the keyword and the condition */
    if /* like so */ (n & 1) {
        printf("odd\n");
    }
    if // a line comment works there too
    (n > 5) {
        printf("big\n");
    }
    /* multi-line comment
       if (still_commented) {
           not code;
       }
    */
    return 0;
}
