#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace stocycle::app {

struct Io {
  std::ostream& out;  // reports
  std::ostream& log;  // progress with --verbose
  bool verbose = false;
};

void cmd_simulate(const RunConfig& cfg, Io& io);
void cmd_periodogram(const RunConfig& cfg, Io& io);
void cmd_fit(const RunConfig& cfg, Io& io);
void cmd_summarize(const RunConfig& cfg, Io& io);
void cmd_decompose(const RunConfig& cfg, Io& io);
void cmd_clock(const RunConfig& cfg, Io& io);
void cmd_forecast(const RunConfig& cfg, Io& io);

// Full command line: parses arguments, dispatches and maps failures to exit
// codes (0 success, 2 configuration, 3 data, 4 numerical, 1 anything else).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stocycle::app
