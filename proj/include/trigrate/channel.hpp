// Finite-rate, delay-afflicted channel between sensor and controller.
#ifndef TRIGRATE_CHANNEL_HPP
#define TRIGRATE_CHANNEL_HPP

#include "trigrate/jordan.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trigrate {

using Bits = std::vector<bool>;

/// ceil(log2 n) for n >= 1.
int ceil_log2(std::int64_t n);

/// One transmission from the sensor.
struct Packet {
  CoordId coord;
  int flat = 0;
  std::int64_t seq = 0;
  double t_send = 0.0;
  Bits payload;

  int size() const { return static_cast<int>(payload.size()); }
};

enum class DelayKind { kConstant, kUniform, kExplicit, kAllMax, kAllZero, kAlternating };

/// A realization {Delta_k} of channel delays, every value in [0, gamma].
/// Uniform draws are counter based (seed, lane, k), so the k-th delay of a
/// lane does not depend on how other lanes were consumed.
class DelaySchedule {
 public:
  static DelaySchedule constant(double delay, double gamma);
  static DelaySchedule uniform(double gamma, std::uint64_t seed);
  static DelaySchedule explicit_list(std::vector<double> delays, double gamma);
  static DelaySchedule all_max(double gamma);
  static DelaySchedule all_zero(double gamma);
  /// gamma, 0, gamma, 0, ...
  static DelaySchedule alternating(double gamma);

  /// Parse one of "constant", "uniform", "all-max", "all-zero", "alternating".
  /// `value` is the constant delay for "constant".
  static DelaySchedule from_name(std::string_view name, double gamma, std::uint64_t seed, double value = 0.0);

  DelayKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& values() const { return values_; }
  std::string name() const;

  /// Delay of the k-th packet on `lane`. Explicit lists repeat cyclically.
  double delay(std::int64_t k, int lane = 0) const;

 private:
  DelaySchedule(DelayKind kind, double gamma) : kind_(kind), gamma_(gamma) {}

  DelayKind kind_;
  double gamma_;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
};

enum class ChannelLayout { kParallel, kSharedWithHeader };

/// kIdleBoundedQueueing: a packet waits until the lane is idle and then
/// takes Delta_k, so delays accumulate under load.
/// kFifoHold: delivery at max(t_send + Delta_k, previous delivery).
/// kStopAndWait: submitting while the lane is busy is a protocol violation.
enum class ChannelSemantics { kIdleBoundedQueueing, kFifoHold, kStopAndWait };

struct ChannelMode {
  ChannelLayout layout = ChannelLayout::kParallel;
  ChannelSemantics semantics = ChannelSemantics::kIdleBoundedQueueing;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct Delivery {
  double t_c = 0.0;
  Packet packet;
};

class Channel {
 public:
  Channel(ChannelMode mode, int n);

  /// Schedule `packet` with delay realization `delay`; returns t_c.
  double submit(Packet packet, double delay);

  /// Remove and return the earliest pending reception. Ties go to the lower
  /// (block, index), then to submission order. A well-formed loop never
  /// leaves a reception earlier than `t_now` pending.
  std::optional<Delivery> next_reception(double t_now);

  std::optional<double> peek_time() const;

  /// True while a packet on the lane of `flat` is undelivered at time t.
  bool busy(int flat, double t) const;

  /// ceil(log2 n) in shared mode, 0 for parallel lanes.
  int header_bits() const { return header_bits_; }
  int wire_bits(const Packet& p) const { return p.size() + header_bits_; }
  std::size_t in_flight() const { return pending_.size(); }
  const ChannelMode& mode() const { return mode_; }

 private:
  struct Pending {
    double t_c;
    std::int64_t order;
    Packet packet;
  };
  static bool later(const Pending& a, const Pending& b);
  int lane(int flat) const;

  ChannelMode mode_;
  int n_;
  int header_bits_;
  std::vector<double> busy_until_;
  std::vector<Pending> pending_;  // min-heap under `later`
  std::int64_t submitted_ = 0;
};

}  // namespace trigrate

#endif  // TRIGRATE_CHANNEL_HPP
