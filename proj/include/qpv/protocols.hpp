#pragma once

// One-round position verification: the generic challenge/response round with
// k+1 verifiers, BB84 (k = 1), its purified EPR variant, sequential
// repetition and the d-dimensional sum-sharing scheme.
//
// Verifiers are parties 0..k, an honest prover is party 100 and adversaries
// are parties 200, 201, ... Verifier V0 sends the BB84 qubit; every other
// verifier sends one share of the basis. The verifiers' private back-channel
// is out of band.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qpv/quantum_store.hpp"
#include "qpv/spacetime.hpp"

namespace qpv {

inline constexpr PartyId kHonestProver = 100;
inline constexpr PartyId kFirstAdversary = 200;
// Wire value of the authentication tag "bottom"; never a bit value.
inline constexpr int kBottom = 2;

enum class AdversaryModel { NoPE, Unrestricted };

// A strategy asked for entanglement the evaluating model does not allow.
class ModelViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Layout {
  std::vector<Position> verifiers;  // V0..Vk
  Position prover;                  // the claimed position
  void validate() const;            // throws ConfigError
};

// 1-D layout V0 = 0, V1 = 1, prover at `pos`.
Layout line_layout(double pos = 0.5);

struct PvChallenge {
  int theta = 0;
  int x = 0;
  std::vector<int> shares;  // one per verifier V1..Vk, XOR = theta
};

struct VerifierRecord {
  std::optional<int> reply;
  double arrival = 0.0;
  bool in_time = false;
};

struct ProtocolVerdict {
  std::vector<VerifierRecord> verifiers;
  PvChallenge challenge;
  bool joint_accept = false;
  bool aborted = false;
  std::string abort_reason;
  // Purified variant: when V0 measured its EPR half, and the reply arrival
  // at V0 that triggered it.
  std::optional<double> v0_measure_time;
  std::optional<double> v0_reply_arrival;
  std::vector<TranscriptEntry> transcript;
};

struct RoundSpec {
  std::size_t shares = 1;      // k: number of verifiers besides V0
  bool purified = false;
  bool accept_bottom = false;  // wAUTH with verifier message bit 0
  std::optional<int> forced_theta;
  std::optional<int> forced_x;
  bool keep_transcript = false;
};

class ProverStrategy;

// What a strategy sees while installing its handlers.
class RoundContext {
 public:
  RoundContext(EventEngine& engine, QuantumStore& store, Rng& rng, const Layout& layout, const TimingConfig& timing,
               AdversaryModel model, std::size_t epr_budget, const PvChallenge& challenge)
      : engine(engine), store(store), rng(rng), layout(layout), timing(timing), model(model),
        epr_budget_(epr_budget), challenge_(challenge) {}

  EventEngine& engine;
  QuantumStore& store;
  Rng& rng;
  const Layout& layout;
  const TimingConfig& timing;
  AdversaryModel model;

  // One pre-shared EPR pair. Throws ModelViolation under No-PE or once the
  // declared budget is used up.
  std::pair<Qubit, Qubit> share_epr();
  std::size_t epr_used() const { return epr_used_; }

  // Shares V2..Vk handed to the strategy for free (the d-dimensional
  // reduction); V1's share is never leaked.
  std::vector<int> free_shares() const;

 private:
  std::size_t epr_budget_;
  std::size_t epr_used_ = 0;
  const PvChallenge& challenge_;
};

class ProverStrategy {
 public:
  virtual ~ProverStrategy() = default;
  virtual std::string id() const = 0;
  virtual bool honest() const { return false; }
  virtual std::size_t epr_budget() const { return 0; }
  // Positions of the parties the strategy controls, kFirstAdversary + i.
  virtual std::vector<Position> positions(const Layout& layout) const = 0;
  // Party that intercepts the challenge of verifier i.
  virtual PartyId receiver_for(std::size_t verifier) const = 0;
  // Places nothing; installs handlers for its own parties.
  virtual void install(RoundContext& ctx) = 0;
};

// Honest prover at pos: XORs the shares into theta, measures the qubit and
// broadcasts the outcome. With `bottom_probability` > 0 it answers kBottom
// with that probability (wAUTH with message bit 0).
class HonestProver : public ProverStrategy {
 public:
  explicit HonestProver(double bottom_probability = 0.0) : bottom_probability_(bottom_probability) {}
  std::string id() const override { return "honest"; }
  bool honest() const override { return true; }
  std::vector<Position> positions(const Layout& layout) const override { return {layout.prover}; }
  PartyId receiver_for(std::size_t) const override { return kHonestProver; }
  void install(RoundContext& ctx) override;

 private:
  double bottom_probability_;
};

using StrategyFactory = std::function<std::unique_ptr<ProverStrategy>()>;

// Draws theta, x and shares: theta, x, then k-1 random shares, the last share
// completing the XOR.
PvChallenge draw_challenge(std::size_t shares, Rng& rng, std::optional<int> forced_theta = std::nullopt,
                           std::optional<int> forced_x = std::nullopt);

// Generic round: full spacetime replay and verdict. Validates the layout,
// enclosure and the Delta distance of every adversary position.
ProtocolVerdict pv_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                         AdversaryModel model, const RoundSpec& spec, Rng& rng);

ProtocolVerdict pv_bb84_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                              AdversaryModel model, Rng& rng);
ProtocolVerdict pv_bb84_purified_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                                       AdversaryModel model, Rng& rng);
// d+1 verifiers; d = layout.verifiers.size() - 1.
ProtocolVerdict pv_ddim_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                              AdversaryModel model, Rng& rng);

struct SequentialVerdict {
  bool joint_accept = false;
  std::size_t rounds_run = 0;
  std::vector<ProtocolVerdict> rounds;
};

// Rounds run strictly one after another with a fresh strategy each round
// (no entanglement carried over); stops at the first rejection.
SequentialVerdict pv_sequential(std::size_t n_rounds, const Layout& layout, const StrategyFactory& make,
                                const TimingConfig& cfg, AdversaryModel model, Rng& rng);

}  // namespace qpv
