#include <stdbool.h>
void spin(void) {
  while (true) { }
  while (0x10) break;
  while (1.0) { }
  while (0) { }
  while (1 == 1) { }
  do { } while (1u);
  while (TRUE) { }
}
