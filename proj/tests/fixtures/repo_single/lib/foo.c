/* helpers */
#include "foo.h"

int foo(int a) { return a; }

int foo_caller(void);
