#include <stdio.h>
#include <string.h>

int main(void)
{
    const char *hint = "if (x) { this is prose, not code }";
    const char *quoted = "she said \"if (ready) go\" and left";
    char open = '(';
    char close = ')';
    char escaped = '\'';
    if (((strlen(hint) > 10) ^ (__bfa_log(1) && (__bfa_flip_id() == 1)))) {
        printf("%s %c%c %c\n", quoted, open, close, escaped);
    }
    if (((hint[0] == 'i') ^ (__bfa_log(2) && (__bfa_flip_id() == 2)))) {
        printf("starts with i\n");
    }
    return 0;
}
