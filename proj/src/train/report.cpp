#include "ann/train/report.hpp"

#include <fstream>

#include <fmt/format.h>

namespace ann::train {

std::string metrics_csv(const RunResult& result) {
  std::string out = "epoch,train_acc,test_acc,train_loss,test_loss\n";
  for (const auto& e : result.epochs) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", e.epoch, e.train_acc, e.test_acc, e.train_loss,
                       e.test_loss);
  }
  return out;
}

std::string confusion_csv(const Confusion& confusion) {
  std::string out = "true\\pred";
  for (std::size_t j = 0; j < confusion.size(); ++j) out += fmt::format(",{}", j);
  out += '\n';
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    out += std::to_string(i);
    for (long v : confusion[i]) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "c,mean_acc,std_acc\n";
  for (const auto& p : points) out += fmt::format("{},{:.6f},{:.6f}\n", p.c, p.mean_acc, p.std_acc);
  return out;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

}  // namespace ann::train
