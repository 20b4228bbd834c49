#include "fbsd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fbsd {
namespace {

struct Projection {
  double ref_energy = 0.0;
  double beta = 0.0;           // <est, ref> / |ref|^2
  double target_energy = 0.0;  // |beta ref|^2
  double residual_energy = 0.0;  // |est - beta ref|^2
  double error_energy = 0.0;     // |ref - est|^2
};

Projection project(std::span<const float> ref, std::span<const float> est) {
  if (ref.size() != est.size()) {
    throw MetricError("signal lengths differ: " + std::to_string(ref.size()) + " vs " +
                      std::to_string(est.size()));
  }
  if (ref.empty()) throw MetricError("empty signals");
  Projection p;
  double dot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    p.ref_energy += static_cast<double>(ref[i]) * ref[i];
    dot += static_cast<double>(ref[i]) * est[i];
  }
  if (p.ref_energy == 0.0) throw MetricError("reference signal is silent");
  p.beta = dot / p.ref_energy;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double target = p.beta * ref[i];
    const double residual = est[i] - target;
    const double error = static_cast<double>(ref[i]) - est[i];
    p.target_energy += target * target;
    p.residual_energy += residual * residual;
    p.error_energy += error * error;
  }
  return p;
}

double ratio_db(double signal, double noise) {
  if (noise <= signal * std::pow(10.0, -kSdrCapDb / 10.0)) return kSdrInfinity;
  return 10.0 * std::log10(signal / noise);
}

double capped(double db) { return std::min(db, kSdrCapDb); }

std::string fmt_db(double v) {
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

double si_sdr(std::span<const float> ref, std::span<const float> est) {
  const Projection p = project(ref, est);
  if (p.target_energy == 0.0) return -kSdrInfinity;
  return ratio_db(p.target_energy, p.residual_energy);
}

double sd_sdr(std::span<const float> ref, std::span<const float> est) {
  const Projection p = project(ref, est);
  if (p.target_energy == 0.0) return -kSdrInfinity;
  return ratio_db(p.target_energy, p.error_energy);
}

double snr(std::span<const float> ref, std::span<const float> est) {
  const Projection p = project(ref, est);
  return ratio_db(p.ref_energy, p.error_energy);
}

UtteranceScores evaluate(const AudioBuffer& clean, const AudioBuffer& processed,
                         std::string name) {
  if (clean.sample_rate != processed.sample_rate) {
    throw MetricError("sample rates differ");
  }
  UtteranceScores s;
  s.name = std::move(name);
  s.si_sdr = si_sdr(clean.samples, processed.samples);
  s.sd_sdr = sd_sdr(clean.samples, processed.samples);
  s.stoi = std::clamp(stoi(clean.samples, processed.samples, clean.sample_rate), 0.0, 1.0);
  return s;
}

double EvalReport::mean_si_sdr() const {
  if (utterances.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& u : utterances) acc += capped(u.si_sdr);
  return acc / static_cast<double>(utterances.size());
}

double EvalReport::mean_sd_sdr() const {
  if (utterances.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& u : utterances) acc += capped(u.sd_sdr);
  return acc / static_cast<double>(utterances.size());
}

double EvalReport::mean_stoi() const {
  if (utterances.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& u : utterances) acc += u.stoi;
  return acc / static_cast<double>(utterances.size());
}

std::string EvalReport::to_jsonl() const {
  std::ostringstream os;
  for (const auto& u : utterances) {
    os << "{\"utterance\": \"" << json_escape(u.name) << "\", \"si_sdr\": " << fmt_db(u.si_sdr)
       << ", \"sd_sdr\": " << fmt_db(u.sd_sdr) << ", \"stoi\": " << fmt_db(u.stoi) << "}\n";
  }
  os << "{\"aggregate\": true, \"count\": " << utterances.size()
     << ", \"si_sdr\": " << fmt_db(mean_si_sdr()) << ", \"sd_sdr\": " << fmt_db(mean_sd_sdr())
     << ", \"stoi\": " << fmt_db(mean_stoi()) << "}\n";
  return os.str();
}

std::string EvalReport::summary_table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %10s %10s %8s\n", "utterance", "SI-SDR", "SD-SDR",
                "STOI");
  os << line;
  auto db = [](double v) {
    char b[32];
    if (std::isinf(v)) {
      std::snprintf(b, sizeof(b), "%s", v > 0 ? "inf" : "-inf");
    } else {
      std::snprintf(b, sizeof(b), "%.2f", v);
    }
    return std::string(b);
  };
  for (const auto& u : utterances) {
    std::snprintf(line, sizeof(line), "%-28s %10s %10s %8.4f\n",
                  u.name.empty() ? "-" : u.name.c_str(), db(u.si_sdr).c_str(),
                  db(u.sd_sdr).c_str(), u.stoi);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-28s %10.2f %10.2f %8.4f\n", "mean", mean_si_sdr(),
                mean_sd_sdr(), mean_stoi());
  os << line;
  return os.str();
}

}  // namespace fbsd
