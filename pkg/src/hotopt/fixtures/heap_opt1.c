/* heap.c, stage 1 (loops): generated with -D SMALL -D DEBUG.
 * Rules applied in this stage: LOOP_COUNTDOWN.
 * Regenerate with walkthroughs/make_staged_heap.py. */
void gen_array(int **a, int n);
void hsort(int *a, int n);
void adjust(int *a, int i, int n);
void swap(int *a, int *b);

int main() {
    int *a;
    int i;
    gen_array(&a, 100);
    for (i = 100; i != 0; i--)
        printf("%d ", a[(100 - i) + 1]);
    printf("\n");
    hsort(a, 100);
    for (i = 100; i != 0; i--)
        printf("%d ", a[(100 - i) + 1]);
    printf("\n");
    return 1;
}

void gen_array(int **a, int n) {
    int i;
    *a = (int *)malloc((n + 1) * sizeof(int));
    srand(time((int *)NULL));
    for (i = n - 1; i > 0; i--)
        (*a)[n - i] = rand();
    (*a)[0] = n;
}

void hsort(int *a, int n) {
    int i;
    int t;
    for (i = n / 2; i >= 1; i--)
        adjust(a, i, n);
    for (i = n - 1; i >= 1; i--) {
        swap(&a[1], &a[i + 1]);
        adjust(a, 1, i);
    }
}

void swap(int *a, int *b) {
    int t;
    t = *a;
    *a = *b;
    *b = t;
}

void adjust(int *a, int i, int n) {
    int j;
    int done = 0;
    int k;
    k = a[i];
    j = 2 * i;
    while ((j <= n) && !done) {
        if (j < n)
            if (a[j] < a[j + 1])
                j = j + 1;
        if (k >= a[j])
            done = 1;
        else {
            a[j / 2] = a[j];
            j = 2 * j;
        }
    }
    a[j / 2] = k;
}
