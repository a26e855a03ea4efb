#include <stdio.h>

int add(int a, int b) {
  int s = a + b;
  return s;
}

int main(void) {
  int x = 3;
  int y = add(x, 4);
  if (y > 5) {
    printf("%d\n", y);
  }
  return 0;
}
