#include <iostream>

#include "shla/acceptance.hpp"

int main() {
  int failures = shla::acceptance::run_all(std::cout);
  if (failures == 0) {
    std::cout << "acceptance: all 11 criteria PASS\n";
    return 0;
  }
  std::cout << "acceptance: " << failures << " criteria FAILED\n";
  return 1;
}
