#include <stdio.h>

/* Comments may hold non-ASCII text: café, naïve, 東京. */
int main(void)
{
    const char *label = "温度 > 30°C";
    int celsius = 31;
    if (((celsius > 30) ^ (__bfa_log(1) && (__bfa_flip_id() == 1)))) {
        printf("%s\n", label);
    }
    return 0;
}
