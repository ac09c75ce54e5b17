/* Factorial case study: computes FACT_N! in base-10^FA_DPE limbs.
 *
 * Transcribed from the original listing with these changes:
 *  - mult_fa(): "while (i <= count || carry > 0) count = i-1;" is the
 *    do-while termination followed by the assignment, as in the optimized
 *    listing; it is written that way here.
 *  - fact() calls init_fa() before multiplying; without it fa[0] stays 0
 *    and every product is 0.
 *  - the DEBUG call to print_fa() gets its missing semicolon.
 *  - Scale is selectable: -D SMALL computes 10! (desk scale); the default
 *    is the original 2000!. FACT_N may also be predefined directly.
 */
#include "header"
#define FA_SIZE 10000
/* number of array elements */
#define FA_DPE 4
/* 4 digits per array element */
#ifdef SMALL
#define FACT_N 10
#endif
#ifndef FACT_N
#define FACT_N 2000
#endif

int fa [FA_SIZE];
int fa_modulo; /* 10 - FA_DPE */
int count;
void fact(int n);
void print_fa();
void mult_fa(int n);
void init_fa();

int main(int argc, char **argv) {
    fact(FACT_N);
    /* Calculate factorial of FACT_N */
    return 0; }

void fact(int n) {
    int i;
    fa_modulo = 1;
    for (i=1; i <= FA_DPE; i++)    fa_modulo *= 10;
    init_fa();
    for (i=2; i <= n; i++)    mult_fa(i);
#ifdef DEBUG
    print_fa();
#endif
}
void mult_fa(int k)
{
    register int i = 0; int carry = 0; int product = 0;
    do {
        product = fa [i] * k + carry;
        fa[i] = product % fa_modulo ;
        carry = product / fa_modulo;
        i++;
    } while (i <= count || carry > 0);
    count = i-1;
}
void init_fa(){
    int i;
    for (i=1; i<FA_SIZE; i++)    fa[i] = 0;
    fa[0] = 1;
}
void print_fa ()
{
    char str[10] = "" ; int i;
    printf("%0d", fa[count--]);
    while (count >= 0)
    {
        sprintf (str, "%0d", fa[count]);
        for (i=FA_DPE; i > strlen(str); i--)
            putchar('0') ;
        printf( "%0d", fa[count]);
        fflush(stdout) ;
        count--;
    }
    printf("\n") ;
}
