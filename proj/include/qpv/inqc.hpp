#pragma once

// Instantaneous nonlocal quantum computation by iterated, uncorrected
// teleportation. Party 0 ("Alice") ends up holding the register that carries
// U|psi> up to Pauli corrections; the other parties hold only classical
// records until one final exchange reveals the correction.
//
// Only the channel chain that actually carries the data is materialized.
// Channels selected by labels other than the realized one hold halves of
// fresh EPR pairs that are never entangled with the data, so their Bell
// outcomes are uniform and independent of everything else; they are
// accounted for but not simulated.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qpv/pauli.hpp"
#include "qpv/quantum_store.hpp"

namespace qpv {

// U_{x, y_1..y_{N-1}} on A (x) B_1 (x) ... (x) B_{N-1}. Two-party families
// have a single B.
struct UnitaryFamily {
  std::size_t n_a = 1;
  std::vector<std::size_t> n_b;     // qubits held by each non-distinguished party
  std::size_t x_count = 1;
  std::vector<std::size_t> y_counts;  // one per non-distinguished party
  std::vector<Matrix> members;       // mixed-radix order (x, y_1, ..., y_{N-1})

  std::size_t parties() const { return n_b.size() + 1; }
  std::size_t total_qubits() const;
  std::size_t index(std::size_t x, const std::vector<std::size_t>& ys) const;
  const Matrix& at(std::size_t x, const std::vector<std::size_t>& ys) const;
  const Matrix& at(std::size_t x, std::size_t y) const { return at(x, std::vector<std::size_t>{y}); }
  // Throws std::invalid_argument on size mismatch or a non-unitary member.
  void validate() const;

  static UnitaryFamily single(Matrix u, std::size_t n_a, std::vector<std::size_t> n_b);
  static UnitaryFamily random(std::size_t n_a, std::vector<std::size_t> n_b, std::size_t x_count,
                              std::vector<std::size_t> y_counts, Rng& rng);
};

struct InqcTranscript;

struct InqcRound {
  std::string label;  // realized channel label: input x followed by earlier k's
  PauliKey k;         // Alice's Bell outcome (teleporting to party 1)
  PauliKey ell;       // party 1's Bell outcome on the realized return channel
  std::shared_ptr<InqcTranscript> nested;  // sub-run among parties 1..N-1 (N >= 3)
  std::uint64_t epr_pairs = 0;             // consumed by this round on the realized chain
};

struct InqcTranscript {
  std::size_t parties = 2;
  std::size_t n_qubits = 0;  // size of the register Alice teleports
  std::size_t rounds_cap = 0;
  std::vector<InqcRound> rounds;
  std::optional<std::size_t> success_round;  // index into rounds
  // Keys of folding each B_p into Alice's register and back out.
  std::vector<PauliKey> fold_in;
  std::vector<PauliKey> fold_out;
  std::size_t n_a = 0;
  std::vector<std::size_t> n_b;
  std::uint64_t epr_consumed = 0;
  double worst_case_epr_log2 = 0.0;  // materialized count without lazy channels
  std::size_t cross_messages = 0;    // classical messages between parties while rounds run
};

// Corrections to apply: `keys[0]` on A, `keys[p]` on B_p.
struct Correction {
  std::vector<PauliKey> keys;
};

// Recomputes the qubit-wise Pauli correction from the classical records.
// Throws std::invalid_argument if the run did not succeed.
Correction reconcile_corrections(const InqcTranscript& t);

struct InqcRegisters {
  Register a;
  std::vector<Register> b;
  InqcTranscript transcript;
};

// Store-level run on live registers. `u` acts on (A, B_1, ...). On success
// the registers hold (pauli(keys[0]) (x) pauli(keys[1]) ...) U |psi> up to
// global phase, with keys from reconcile_corrections.
InqcRegisters inqc_run(QuantumStore& store, Register a, std::vector<Register> b, const Matrix& u,
                       const std::string& x_label, std::size_t rounds_cap, Rng& rng,
                       std::optional<int> forced_first_k = std::nullopt);

struct InqcResult {
  Statevector output;  // raw (uncorrected) state on A, B_1, ...
  InqcTranscript transcript;
};

// Two-party run on a fresh store. `input` is a state on A (x) B.
InqcResult run_inqc_2party(const UnitaryFamily& family, std::size_t x, std::size_t y, const Statevector& input,
                           std::size_t rounds_cap, Rng& rng, std::optional<int> forced_first_k = std::nullopt);

// N-party run, N = family.parties() >= 2.
InqcResult run_inqc_nparty(const UnitaryFamily& family, std::size_t x, const std::vector<std::size_t>& ys,
                           const Statevector& input, std::size_t rounds_cap, Rng& rng,
                           std::optional<int> forced_first_k = std::nullopt);

// Applies a Correction to a state laid out as (A, B_1, ...).
Statevector apply_correction(const Statevector& s, const Correction& c);

}  // namespace qpv
