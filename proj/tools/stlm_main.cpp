#include <cstdio>

int main() {
  std::puts("stlm: placeholder");
  return 0;
}
