#include <stdio.h>

int main(void)
{
    int grid[3][3] = {{1, 0, 2}, {0, 3, 0}, {4, 0, 5}};
    int i, j, count = 0, sum = 0;
    for (i = 0; i < 3; i++) {
        for (j = 0; j < 3; j++) {
            if (grid[i][j] != 0) {
                count++;
                if (grid[i][j] % 2 == 0) {
                    sum += grid[i][j];
                    if (sum > 4)
                        sum -= 1;
                }
            }
        }
    }
    printf("%d %d\n", count, sum);
    return 0;
}
