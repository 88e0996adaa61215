#include "sgdn/version.hpp"

#include <iostream>

int main() {
  std::cout << "sgdn " << sgdn::version() << "\n";
  return sgdn::version().empty() ? 1 : 0;
}
