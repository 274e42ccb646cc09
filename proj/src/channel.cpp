#include "trigrate/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trigrate {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("DelaySchedule: gamma must be >= 0");
}

}  // namespace

int ceil_log2(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("ceil_log2: n must be >= 1");
  int bits = 0;
  std::int64_t cap = 1;
  while (cap < n) {
    cap <<= 1;
    ++bits;
  }
  return bits;
}

DelaySchedule DelaySchedule::constant(double delay, double gamma) {
  check_gamma(gamma);
  if (delay < 0.0 || delay > gamma) throw std::invalid_argument("DelaySchedule: constant delay outside [0, gamma]");
  DelaySchedule s(DelayKind::kConstant, gamma);
  s.values_ = {delay};
  return s;
}

DelaySchedule DelaySchedule::uniform(double gamma, std::uint64_t seed) {
  check_gamma(gamma);
  DelaySchedule s(DelayKind::kUniform, gamma);
  s.seed_ = seed;
  return s;
}

DelaySchedule DelaySchedule::explicit_list(std::vector<double> delays, double gamma) {
  check_gamma(gamma);
  if (delays.empty()) throw std::invalid_argument("DelaySchedule: explicit list is empty");
  for (double d : delays)
    if (!(d >= 0.0) || d > gamma) throw std::invalid_argument("DelaySchedule: explicit delay outside [0, gamma]");
  DelaySchedule s(DelayKind::kExplicit, gamma);
  s.values_ = std::move(delays);
  return s;
}

DelaySchedule DelaySchedule::all_max(double gamma) {
  check_gamma(gamma);
  return DelaySchedule(DelayKind::kAllMax, gamma);
}

DelaySchedule DelaySchedule::all_zero(double gamma) {
  check_gamma(gamma);
  return DelaySchedule(DelayKind::kAllZero, gamma);
}

DelaySchedule DelaySchedule::alternating(double gamma) {
  check_gamma(gamma);
  return DelaySchedule(DelayKind::kAlternating, gamma);
}

DelaySchedule DelaySchedule::from_name(std::string_view name, double gamma, std::uint64_t seed, double value) {
  if (name == "uniform") return uniform(gamma, seed);
  if (name == "all-max") return all_max(gamma);
  if (name == "all-zero") return all_zero(gamma);
  if (name == "alternating") return alternating(gamma);
  if (name == "constant") return constant(value, gamma);
  throw std::invalid_argument("unknown delay schedule '" + std::string(name) + "'");
}

std::string DelaySchedule::name() const {
  switch (kind_) {
    case DelayKind::kConstant: return "constant";
    case DelayKind::kUniform: return "uniform";
    case DelayKind::kExplicit: return "explicit";
    case DelayKind::kAllMax: return "all-max";
    case DelayKind::kAllZero: return "all-zero";
    case DelayKind::kAlternating: return "alternating";
  }
  return "?";
}

double DelaySchedule::delay(std::int64_t k, int lane) const {
  switch (kind_) {
    case DelayKind::kConstant: return values_.front();
    case DelayKind::kUniform: {
      std::uint64_t h = splitmix64(seed_);
      h = splitmix64(h ^ static_cast<std::uint64_t>(lane));
      h = splitmix64(h ^ static_cast<std::uint64_t>(k));
      const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      return gamma_ * u;
    }
    case DelayKind::kExplicit: return values_[static_cast<std::size_t>(k) % values_.size()];
    case DelayKind::kAllMax: return gamma_;
    case DelayKind::kAllZero: return 0.0;
    case DelayKind::kAlternating: return (k % 2 == 0) ? gamma_ : 0.0;
  }
  return 0.0;
}

Channel::Channel(ChannelMode mode, int n)
    : mode_(mode),
      n_(n),
      header_bits_(mode.layout == ChannelLayout::kSharedWithHeader ? ceil_log2(n) : 0),
      busy_until_(mode.layout == ChannelLayout::kSharedWithHeader ? 1 : static_cast<std::size_t>(n),
                  -std::numeric_limits<double>::infinity()) {
  if (n < 1) throw std::invalid_argument("Channel: n must be >= 1");
}

int Channel::lane(int flat) const {
  if (flat < 0 || flat >= n_) throw std::out_of_range("Channel: coordinate out of range");
  return mode_.layout == ChannelLayout::kSharedWithHeader ? 0 : flat;
}

bool Channel::later(const Pending& a, const Pending& b) {
  if (a.t_c != b.t_c) return a.t_c > b.t_c;
  if (a.packet.coord.block != b.packet.coord.block) return a.packet.coord.block > b.packet.coord.block;
  if (a.packet.coord.index != b.packet.coord.index) return a.packet.coord.index > b.packet.coord.index;
  return a.order > b.order;
}

double Channel::submit(Packet packet, double delay) {
  if (!(delay >= 0.0) || !std::isfinite(delay)) throw std::invalid_argument("Channel::submit: delay must be >= 0");
  if (packet.size() < 1) throw std::invalid_argument("Channel::submit: empty payload");
  const auto l = static_cast<std::size_t>(lane(packet.flat));
  double& busy_until = busy_until_[l];
  double t_c = 0.0;
  switch (mode_.semantics) {
    case ChannelSemantics::kIdleBoundedQueueing:
      t_c = std::max(packet.t_send, busy_until) + delay;
      break;
    case ChannelSemantics::kFifoHold:
      t_c = std::max(packet.t_send + delay, busy_until);
      break;
    case ChannelSemantics::kStopAndWait:
      if (busy_until > packet.t_send)
        throw ProtocolError("stop-and-wait: submission at t=" + std::to_string(packet.t_send) +
                                " while a packet is in flight until t=" + std::to_string(busy_until),
                            packet.t_send);
      t_c = packet.t_send + delay;
      break;
  }
  busy_until = t_c;
  pending_.push_back({t_c, submitted_++, std::move(packet)});
  std::push_heap(pending_.begin(), pending_.end(), later);
  return t_c;
}

std::optional<Delivery> Channel::next_reception(double /*t_now*/) {
  if (pending_.empty()) return std::nullopt;
  std::pop_heap(pending_.begin(), pending_.end(), later);
  Pending p = std::move(pending_.back());
  pending_.pop_back();
  return Delivery{p.t_c, std::move(p.packet)};
}

std::optional<double> Channel::peek_time() const {
  if (pending_.empty()) return std::nullopt;
  return pending_.front().t_c;
}

bool Channel::busy(int flat, double t) const { return busy_until_[static_cast<std::size_t>(lane(flat))] > t; }

}  // namespace trigrate
