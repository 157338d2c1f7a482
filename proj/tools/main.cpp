#include <cstdio>
int main() { std::puts("reebqm"); return 0; }
