#pragma once

// Multi-step position-verification schemes of the general form: in every
// step the prover gets A (and classical x) from V0 and B (and classical y)
// from V1, applies U_{x,y} to A, B and its persistent register R, and hands
// A back to V0 and B back to V1. A register may instead be read out in the
// computational basis and the bits broadcast to both verifiers.
//
// The attack runs the scheme with two adversaries, one on each side, using
// instantaneous nonlocal computation per step and a single crossing round of
// classical messages to fix up A and B. Adversary 1 keeps R; R's Pauli
// correction is never applied but folded into the next step's unitary.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qpv/inqc.hpp"
#include "qpv/protocols.hpp"
#include "qpv/stats.hpp"

namespace qpv {

enum class ReplyMode { QuantumReturn, ClassicalReadout };

struct GenericStep {
  double offset = 0.0;  // inputs reach the claimed position at cfg.T + offset
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t x_count = 1;
  std::size_t y_count = 1;
  std::function<Matrix(std::size_t x, std::size_t y)> unitary;  // on (A, B, R)
  ReplyMode a_mode = ReplyMode::QuantumReturn;
  ReplyMode b_mode = ReplyMode::QuantumReturn;
};

// Verifier-side inputs for one step: a state on (A, B, E) plus labels.
struct StepInput {
  Statevector state;
  std::size_t n_e = 0;
  std::size_t x = 0;
  std::size_t y = 0;
};

class VerifierScript {
 public:
  virtual ~VerifierScript() = default;
  virtual StepInput prepare(std::size_t step, Rng& rng) = 0;
  // The verifiers' private part of the step's input state.
  virtual void keep(std::size_t /*step*/, Register /*e*/) {}
  virtual void on_return(std::size_t step, int verifier, Register q, QuantumStore& store, Rng& rng) = 0;
  virtual void on_readout(std::size_t step, int side, int verifier, const std::vector<int>& bits) = 0;
  // Called once after the replay.
  virtual void finish(QuantumStore& /*store*/) {}
  virtual bool accept() const = 0;
  // Discrete verifier-side view used for distribution comparisons.
  virtual std::vector<int> observation() const = 0;
};

struct GenericScheme {
  std::string id;
  std::size_t n_r = 0;
  std::vector<GenericStep> steps;
  std::function<std::unique_ptr<VerifierScript>()> make_verifier;

  // Sizes, unitarity of every member, two verifiers.
  void validate() const;
};

struct GenericOutcome {
  bool accept = false;
  bool all_in_time = true;
  bool complete = false;  // every expected reply arrived
  std::vector<int> observation;
  std::vector<bool> inqc_success;  // attack only, one per step
  bool inqc_ok = true;
  std::vector<InqcTranscript> inqc;
  std::vector<TranscriptEntry> transcript;
  std::unique_ptr<VerifierScript> verifier;
};

GenericOutcome run_generic_honest(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                  Rng& rng);
// Adversaries at the midpoints of the two verifier-prover segments.
GenericOutcome run_generic_inqc_attack(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                       std::size_t rounds_cap, Rng& rng);

struct GenericComparison {
  std::size_t trials = 0;
  std::size_t honest_accepts = 0;
  std::size_t attack_accepts = 0;
  std::size_t inqc_successes = 0;             // trials where every step's INQC succeeded
  std::size_t attack_accepts_given_success = 0;
  bool timing_ok = true;                      // every emission in time, in both runs
  ChiSquareResult chi_square;                 // honest vs. successful attack observations
  double unconditional() const { return trials ? double(attack_accepts) / double(trials) : 0.0; }
  double conditional() const {
    return inqc_successes ? double(attack_accepts_given_success) / double(inqc_successes) : 0.0;
  }
};

// Trial t uses Rng::derive(seed, 2t) for the honest run and 2t + 1 for the
// attack.
GenericComparison compare_generic(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                  std::size_t rounds_cap, std::size_t trials, std::uint64_t seed);

// BB84 position verification as a one-step scheme: A = H^theta|x>, y = theta,
// U = H^y on A, A read out and broadcast.
GenericScheme bb84_generic_scheme();

// Two interleaved steps with a one-qubit R. Step 1 copies A into R and returns
// A rotated by V1's y1; step 2 writes R xor x2 xor y2 into a fresh A and reads
// it out. Step 2's inputs arrive before step 1's replies could have been
// fixed up by the adversaries.
GenericScheme toy_interleaved_scheme(double step_gap = 0.1);

// One step with n_a = n_b = n_r = 1, two labels per side and Haar-random
// members; the verifier keeps E entangled with A and B and returns the final
// state of (A, B, E) from VerifierScript::finish through
// random_family_verifier_state.
GenericScheme random_family_scheme(Rng& family_rng, std::uint64_t verifier_seed);
std::optional<DensityMatrix> random_family_verifier_state(const VerifierScript& v);

// Upper bound on the probability that some step's INQC exhausts rounds_cap,
// by the union bound over steps of (1 - 4^-n)^cap.
double generic_failure_bound(const GenericScheme& scheme, std::size_t rounds_cap);

}  // namespace qpv
