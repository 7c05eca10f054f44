#pragma once

// Positions in R^d, unit-speed signalling and a deterministic discrete-event
// engine. Deliveries are ordered by (arrival time, receiver id, sequence).

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "qpv/quantum_store.hpp"

namespace qpv {

// Absolute tolerance for time comparisons (arrival vs. deadline, causality).
inline constexpr double kTimeTolerance = 1e-9;

struct Position {
  std::vector<double> coords;

  Position() = default;
  Position(std::initializer_list<double> c) : coords(c) {}
  explicit Position(std::vector<double> c) : coords(std::move(c)) {}
  std::size_t dim() const { return coords.size(); }
  void validate() const;
};

double distance(const Position& a, const Position& b);

struct TimingConfig {
  double T = 0.0;      // challenge arrival time at the claimed position
  double delta = 0.0;  // no adversary closer than this to the claimed position
  double slack = 0.0;  // tolerance on the verifiers' deadline
  void validate() const;
};

enum class Enclosure { Enclosed, Outside, Degenerate };

// Convex-hull membership for pos among the verifier positions (boundary
// counts as enclosed). Degenerate when the verifiers span less than R^d.
Enclosure is_enclosed(const std::vector<Position>& verifiers, const Position& pos);

// Emission times T - d(pos_i, pos). Throws ConfigError unless pos is enclosed.
std::vector<double> schedule_challenges(const std::vector<Position>& verifiers, const Position& prover_pos,
                                        const TimingConfig& cfg);

// arrival <= T + d(verifier, prover_pos) + slack.
bool in_time(double arrival, const Position& verifier, const Position& prover_pos, const TimingConfig& cfg);

using PartyId = int;

struct Payload {
  std::string kind;
  std::vector<int> bits;
  Register qubits;
};

struct Delivery {
  std::uint64_t seq = 0;
  PartyId from = 0;
  PartyId to = 0;
  double emit_time = 0.0;
  double arrival_time = 0.0;
  Payload payload;
};

struct TranscriptEntry {
  std::uint64_t seq;
  PartyId from;
  PartyId to;
  double emit_time;
  double arrival_time;
  std::string kind;
  std::vector<int> bits;
  std::size_t n_qubits;
};

class EventEngine {
 public:
  using Handler = std::function<void(Delivery&, EventEngine&)>;

  void place(PartyId id, Position pos);
  const Position& position(PartyId id) const;
  bool has_party(PartyId id) const { return positions_.count(id) != 0; }
  void on(PartyId id, Handler h);

  // Emits a message at `emit_time`; it arrives after the sender-receiver
  // distance. During a run, emit_time must not precede the current time,
  // except that a party may stamp a message with the time of one of its own
  // earlier deliveries (a local reaction that was evaluated late because it
  // commutes with everything in between). Arrival may never precede the
  // current time. Violations throw CausalityViolation.
  void send(PartyId from, PartyId to, double emit_time, Payload payload);

  void run();
  double now() const { return now_; }
  bool running() const { return running_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  // Delivery times seen by a party so far.
  const std::vector<double>& deliveries_to(PartyId id) const;

 private:
  struct Pending {
    Delivery d;
  };
  static bool later(const Pending& a, const Pending& b);

  std::map<PartyId, Position> positions_;
  std::map<PartyId, Handler> handlers_;
  std::map<PartyId, std::vector<double>> seen_;
  std::vector<Pending> heap_;
  std::vector<TranscriptEntry> transcript_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  bool running_ = false;
};

// Convenience wrapper: place parties, enqueue initial events, run.
struct InitialEvent {
  PartyId from;
  PartyId to;
  double emit_time;
  std::string kind;
  std::vector<int> bits;
};
std::vector<TranscriptEntry> run_events(const std::map<PartyId, Position>& parties,
                                        const std::vector<InitialEvent>& events,
                                        const std::map<PartyId, EventEngine::Handler>& handlers);

// One JSON object per delivery.
void write_transcript_jsonl(std::ostream& os, const std::vector<TranscriptEntry>& t);

}  // namespace qpv
