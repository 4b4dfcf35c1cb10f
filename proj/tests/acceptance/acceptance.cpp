// Full acceptance battery: one PASS/FAIL line per criterion.

#include <cstring>

#include "qps/acceptance.hpp"

int main(int argc, char** argv) {
  qps::BatteryOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;
    else if (std::strcmp(argv[i], "--tamper-sign") == 0) opt.tamper_sign = true;
  }
  const auto results = qps::run_battery(opt);
  return qps::battery_passed(results) ? 0 : 1;
}
