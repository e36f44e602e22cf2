#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <memory>
#include <string>
#include <vector>

#include "ccncheck/codec.hpp"
#include "ccncheck/topology.hpp"

namespace ccncheck {

using BigInt = boost::multiprecision::cpp_int;

struct AppSend {
  NodeId to;
  Bytes payload;
};

struct AppOutput {
  std::uint64_t step = 0;
  std::string value;
};

struct StepResult {
  std::vector<AppSend> sends;
  std::vector<AppOutput> outputs;
};

/// A deterministic application driven by its process node. Every method is a
/// pure function of the current state and its arguments.
class App {
 public:
  virtual ~App() = default;
  virtual std::string kind() const = 0;
  virtual Bytes serialize() const = 0;
  virtual void deserialize(const Bytes& state) = 0;
  /// Index of the last step taken (the output dedup key).
  virtual std::uint64_t step_index() const = 0;
  virtual std::vector<NodeId> peers() const { return {}; }

  /// Initial action when the process first starts.
  virtual StepResult start() = 0;
  virtual bool started() const = 0;
  virtual StepResult on_message(const NodeId& from, const Bytes& payload) = 0;
  /// Timer-driven applications step here; tick_interval() == 0 means none.
  virtual StepResult on_tick() { return {}; }
  virtual Tick tick_interval() const { return 0; }
  virtual bool finished() const = 0;
};

/// Counts upward by one per tick until `steps` values have been output.
class CounterApp final : public App {
 public:
  CounterApp(std::uint64_t steps, Tick tick_interval) : steps_(steps), tick_interval_(tick_interval) {}

  /// The pure step: value -> value + 1, output "value + 1".
  static BigInt step(const BigInt& value) { return value + 1; }

  std::string kind() const override { return "counter"; }
  Bytes serialize() const override;
  void deserialize(const Bytes& state) override;
  std::uint64_t step_index() const override { return static_cast<std::uint64_t>(value_); }
  StepResult start() override;
  bool started() const override { return started_; }
  StepResult on_message(const NodeId&, const Bytes&) override { return {}; }
  StepResult on_tick() override;
  Tick tick_interval() const override { return tick_interval_; }
  bool finished() const override { return value_ >= steps_; }

  const BigInt& value() const noexcept { return value_; }
  void set_value(BigInt v) { value_ = std::move(v); }

 private:
  BigInt value_ = 0;
  std::uint64_t steps_;
  Tick tick_interval_;
  bool started_ = false;
};

struct FibState {
  BigInt prev = 0;
  BigInt curr = 0;
  std::uint64_t index = 0;  // curr == F(index)

  friend bool operator==(const FibState&, const FibState&) = default;
};

Bytes encode_fib(const FibState& s);
FibState decode_fib(const Bytes& payload);

/// One member of a Fibonacci ring. The ring head outputs F(1) and F(2) and
/// hands (1, 1, 2) to the next member; every member that receives
/// (prev, curr, i) outputs F(i + 1) and passes (curr, prev + curr, i + 1)
/// on, until F(n) has been output.
class FibonacciApp final : public App {
 public:
  FibonacciApp(std::vector<NodeId> ring, NodeId self, std::uint64_t n);

  /// The pure step: (prev, curr, i) -> (curr, prev + curr, i + 1).
  static FibState step(const FibState& s) { return {s.curr, s.prev + s.curr, s.index + 1}; }

  std::string kind() const override { return "fibonacci"; }
  Bytes serialize() const override;
  void deserialize(const Bytes& state) override;
  std::uint64_t step_index() const override { return last_.index; }
  std::vector<NodeId> peers() const override;
  StepResult start() override;
  bool started() const override { return started_; }
  StepResult on_message(const NodeId& from, const Bytes& payload) override;
  bool finished() const override { return last_.index >= n_; }

  const FibState& last() const noexcept { return last_; }
  const NodeId& next() const;

 private:
  std::vector<NodeId> ring_;
  NodeId self_;
  std::uint64_t n_;
  FibState last_;
  bool started_ = false;
};

}  // namespace ccncheck
