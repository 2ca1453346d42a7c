#include <stdio.h>
#include <stdlib.h>

struct node {
    int value;
    struct node *next;
};

int main(void)
{
    struct node c = {3, NULL};
    struct node b = {2, &c};
    struct node a = {1, &b};
    struct node *p = &a;
    int sum = 0;
    while (p != NULL) {
        if ((p->value & 1) == 1) {
            sum += p->value;
        }
        p = p->next;
    }
    if ((p = malloc(sizeof *p)) != NULL) {
        p->value = sum;
        printf("%d\n", p->value);
        free(p);
    }
    return 0;
}
