#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "linnash/env.hpp"
#include "linnash/rng.hpp"

namespace linnash {

enum class PullSource : std::uint8_t { SampleU, Opt, Phase, Thompson };

struct RunEntry {
  Index arm = 0;
  double true_mean = 0.0;
  double reward = 0.0;
  std::int32_t phase = 0;  // 0 for Part I, l >= 1 for Part II phase l
  PullSource source = PullSource::Phase;
};

inline std::string phase_tag(const RunEntry& e) {
  switch (e.source) {
    case PullSource::SampleU: return "SAMPLE-U";
    case PullSource::Opt: return "D/G-OPT";
    case PullSource::Phase: return "PHASE(" + std::to_string(e.phase) + ")";
    case PullSource::Thompson: return "TS";
  }
  return "?";
}

inline RunEntry parse_phase_tag(const std::string& tag) {
  RunEntry e;
  if (tag == "SAMPLE-U") {
    e.source = PullSource::SampleU;
  } else if (tag == "D/G-OPT") {
    e.source = PullSource::Opt;
  } else if (tag == "TS") {
    e.source = PullSource::Thompson;
  } else if (tag.size() > 7 && tag.compare(0, 6, "PHASE(") == 0 && tag.back() == ')') {
    e.source = PullSource::Phase;
    e.phase = std::stoi(tag.substr(6, tag.size() - 7));
  } else {
    throw InvalidArgument("unknown phase tag '" + tag + "'");
  }
  return e;
}

struct RunHeader {
  std::string instance_digest;
  std::string algo;
  SeedLineage lineage;
  double optimum = 0.0;
};

struct RunLog {
  RunHeader header;
  std::vector<RunEntry> entries;

  std::size_t horizon() const { return entries.size(); }
};

//! FNV-1a over the raw bytes of arms, theta and model; identifies an instance.
inline std::string instance_digest(const BanditInstance& inst) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ULL;
    }
  };
  const std::uint64_t dims[2] = {inst.size(), inst.dim()};
  feed(dims, sizeof dims);
  const Matrix& x = inst.arms().points();
  feed(x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
  feed(inst.theta_star().data(), sizeof(double) * inst.dim());
  const std::string tag = inst.model().tag();
  feed(tag.data(), tag.size());
  feed(&inst.model().scale, sizeof(double));
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return out;
}

inline RunHeader make_header(const BanditInstance& inst, std::string algo, SeedLineage lineage) {
  return RunHeader{instance_digest(inst), std::move(algo), std::move(lineage), inst.optimum()};
}

}  // namespace linnash
