// first by path order
int helper(void) { return 1; }

int foo(int a)
{
    return a + helper();
}
