struct point { int x, y; };
static const struct point origin = { 0, 0 };
typedef int (*fn)(int);
int apply(fn f, int v) { return f(v); }
int twice(int v) { return v * 2; }
int main(void) {
  struct point ps[2] = { {1, 2}, {3, 4} };
  int total = 0;
  for (int i = 0; i < 2; i++) total += apply(twice, ps[i].x);
  if (total > 3) return total; else return 0;
}
