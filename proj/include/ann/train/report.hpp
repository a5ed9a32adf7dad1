#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "ann/train/harness.hpp"

namespace ann::train {

// `epoch,train_acc,test_acc,train_loss,test_loss`, fixed 6-digit precision.
std::string metrics_csv(const RunResult& result);
// Header `true\pred,0,1,...`, one row per true class.
std::string confusion_csv(const Confusion& confusion);
// `c,mean_acc,std_acc`
std::string sweep_csv(std::span<const SweepPoint> points);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace ann::train
