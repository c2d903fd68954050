// placeholder; the real CLI is wired up once the pipeline stages exist
#include <cstdio>

int main() {
  std::puts("playerform: pipeline stages not wired yet");
  return 1;
}
