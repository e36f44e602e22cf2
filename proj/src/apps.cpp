#include "ccncheck/apps.hpp"

#include <algorithm>

#include "ccncheck/errors.hpp"
#include "ccncheck/trace.hpp"

namespace ccncheck {
namespace {

std::string str(const BigInt& v) { return v.str(); }

BigInt big(const Json& j) { return BigInt(j.get<std::string>()); }

Json parse_state(const Bytes& state) {
  try {
    return Json::parse(to_string(state));
  } catch (const Json::exception& e) {
    throw Error(std::string("app state: ") + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- counter

Bytes CounterApp::serialize() const {
  Json j = {{"value", str(value_)}, {"started", started_}};
  return to_bytes(j.dump());
}

void CounterApp::deserialize(const Bytes& state) {
  auto j = parse_state(state);
  value_ = big(j.at("value"));
  started_ = j.at("started").get<bool>();
}

StepResult CounterApp::start() {
  started_ = true;
  return {};
}

StepResult CounterApp::on_tick() {
  StepResult r;
  if (finished()) return r;
  value_ = step(value_);
  r.outputs.push_back({step_index(), str(value_)});
  return r;
}

// -------------------------------------------------------------- fibonacci

Bytes encode_fib(const FibState& s) {
  Json j = {{"prev", str(s.prev)}, {"curr", str(s.curr)}, {"index", s.index}};
  return to_bytes(j.dump());
}

FibState decode_fib(const Bytes& payload) {
  auto j = parse_state(payload);
  return {big(j.at("prev")), big(j.at("curr")), j.at("index").get<std::uint64_t>()};
}

FibonacciApp::FibonacciApp(std::vector<NodeId> ring, NodeId self, std::uint64_t n)
    : ring_(std::move(ring)), self_(std::move(self)), n_(n) {
  if (std::find(ring_.begin(), ring_.end(), self_) == ring_.end())
    throw Error("fibonacci: " + self_ + " is not in the ring");
  if (n_ < 2) throw Error("fibonacci: need at least two steps");
}

const NodeId& FibonacciApp::next() const {
  auto it = std::find(ring_.begin(), ring_.end(), self_);
  ++it;
  return it == ring_.end() ? ring_.front() : *it;
}

std::vector<NodeId> FibonacciApp::peers() const {
  std::vector<NodeId> out;
  for (const auto& n : ring_)
    if (n != self_) out.push_back(n);
  return out;
}

Bytes FibonacciApp::serialize() const {
  Json j = {{"prev", str(last_.prev)}, {"curr", str(last_.curr)}, {"index", last_.index}, {"started", started_}};
  return to_bytes(j.dump());
}

void FibonacciApp::deserialize(const Bytes& state) {
  auto j = parse_state(state);
  last_ = {big(j.at("prev")), big(j.at("curr")), j.at("index").get<std::uint64_t>()};
  started_ = j.at("started").get<bool>();
}

StepResult FibonacciApp::start() {
  started_ = true;
  StepResult r;
  if (ring_.front() != self_) return r;
  last_ = {1, 1, 2};
  r.outputs.push_back({1, "1"});
  r.outputs.push_back({2, "1"});
  if (ring_.size() == 1) {
    // a ring of one keeps the sequence local
    while (!finished()) {
      last_ = step(last_);
      r.outputs.push_back({last_.index, str(last_.curr)});
    }
    return r;
  }
  if (!finished()) r.sends.push_back({next(), encode_fib(last_)});
  return r;
}

StepResult FibonacciApp::on_message(const NodeId&, const Bytes& payload) {
  StepResult r;
  last_ = step(decode_fib(payload));
  r.outputs.push_back({last_.index, str(last_.curr)});
  if (!finished()) r.sends.push_back({next(), encode_fib(last_)});
  return r;
}

}  // namespace ccncheck
