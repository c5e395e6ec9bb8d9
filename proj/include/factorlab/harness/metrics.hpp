#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab::harness {

struct MetricsRecord {
  long step = 0;
  double train_loss = 0.0;
  double forward_acc = 0.0;
  double backward_acc = 0.0;
  double incorrect_rate = 0.0;
  bool has_incorrect = false;
};

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

/// Deterministic columns only; wall-clock timings go to a sidecar file so
/// reruns with the same seed produce byte-identical metrics.
inline std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string s = "step,train_loss,forward_accuracy,backward_accuracy,incorrect_inference\n";
  for (const auto& r : records) {
    s += std::to_string(r.step);
    s += "," + format_fixed(r.train_loss);
    s += "," + format_fixed(r.forward_acc, 2);
    s += "," + format_fixed(r.backward_acc, 2);
    s += ",";
    if (r.has_incorrect) s += format_fixed(r.incorrect_rate, 2);
    s += "\n";
  }
  return s;
}

inline std::string timings_csv(const std::vector<std::pair<long, double>>& rows) {
  std::string s = "step,seconds\n";
  for (const auto& [step, seconds] : rows) {
    s += std::to_string(step) + "," + format_fixed(seconds, 3) + "\n";
  }
  return s;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), cat("write_file: cannot open ", path));
  out << contents;
  require(out.good(), cat("write_file: write failed for ", path));
}

}  // namespace factorlab::harness
