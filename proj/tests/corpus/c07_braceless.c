void h(int *a, int n) {
  int i, j;
  for (i = 0; i < n; i++)
    for (j = 0; j < i; j++)
      if (a[j] > a[i])
        a[j] = a[i];
      else
        a[i]++;
  while (n--)
    a[n] = 0;
}
