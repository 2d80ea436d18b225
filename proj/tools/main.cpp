#include <cstdio>
int main() { std::puts("qpscat placeholder"); return 0; }
