#pragma once

// Dishonest-prover coalitions against BB84 position verification. In the
// two-verifier layouts adversary 0 sits between V0 and the claimed position
// and adversary 1 between V1 and the claimed position (midpoints unless
// given explicitly).

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qpv/entropy.hpp"
#include "qpv/protocols.hpp"

namespace qpv {

// Pair of adversaries on the two verifier-prover segments.
class TwoSidedAttack : public ProverStrategy {
 public:
  explicit TwoSidedAttack(std::optional<std::array<Position, 2>> at = std::nullopt) : at_(std::move(at)) {}
  std::vector<Position> positions(const Layout& layout) const override;
  PartyId receiver_for(std::size_t verifier) const override {
    return kFirstAdversary + static_cast<PartyId>(verifier == 0 ? 0 : 1);
  }

 protected:
  static constexpr PartyId kNear0 = kFirstAdversary;
  static constexpr PartyId kNear1 = kFirstAdversary + 1;

 private:
  std::optional<std::array<Position, 2>> at_;
};

// Adversary 0 measures the qubit in a fixed or random basis and relays the
// outcome; adversary 1 forwards it to V1.
class MeasureAndRelayAttack : public TwoSidedAttack {
 public:
  enum class Basis { Breidbart, Random };
  explicit MeasureAndRelayAttack(Basis basis, std::optional<std::array<Position, 2>> at = std::nullopt)
      : TwoSidedAttack(std::move(at)), basis_(basis) {}
  std::string id() const override { return basis_ == Basis::Breidbart ? "breidbart" : "random_basis"; }
  void install(RoundContext& ctx) override;

 private:
  Basis basis_;
};

// Adversary 0 keeps the qubit until theta is relayed to it, then measures
// correctly; V1 hears the answer late.
class StoreAndWaitAttack : public TwoSidedAttack {
 public:
  using TwoSidedAttack::TwoSidedAttack;
  std::string id() const override { return "store_and_wait"; }
  void install(RoundContext& ctx) override;
};

// Adversary 0 forwards the qubit to adversary 1, who measures correctly; V0
// hears the answer late.
class ForwardAttack : public TwoSidedAttack {
 public:
  using TwoSidedAttack::TwoSidedAttack;
  std::string id() const override { return "forward"; }
  void install(RoundContext& ctx) override;
};

// Teleportation attack with one pre-shared EPR pair.
class TeleportPreSharedAttack : public TwoSidedAttack {
 public:
  explicit TeleportPreSharedAttack(std::optional<int> forced_k = std::nullopt, std::size_t budget = 1,
                                   std::optional<std::array<Position, 2>> at = std::nullopt)
      : TwoSidedAttack(std::move(at)), forced_k_(forced_k), budget_(budget) {}
  std::string id() const override { return "teleport_pre_shared"; }
  std::size_t epr_budget() const override { return budget_; }
  void install(RoundContext& ctx) override;

 private:
  std::optional<int> forced_k_;
  std::size_t budget_;
};

// Adversary 0 maps the qubit into E0 (x) E1 with an isometry and sends E1 on;
// each side then measures its part with a theta-dependent measurement.
struct SplitStrategy {
  std::size_t n_e0 = 1;
  std::size_t n_e1 = 1;
  Matrix isometry;                  // unitary on (input, n_e0 + n_e1 - 1 ancillas)
  std::array<Matrix, 2> measure_e0;  // per theta, unitary on E0 before reading its first qubit
  std::array<Matrix, 2> measure_e1;

  // Dimension cap: at most 2 qubits (4 dimensions) per side.
  static constexpr std::size_t kMaxQubitsPerSide = 2;
  void validate() const;
  static SplitStrategy random(std::size_t n_e0, std::size_t n_e1, Rng& rng);
  // |psi_{A E0 E1}> for A maximally entangled with the input qubit.
  CitInstance cit_instance() const;
};

class SplitAttack : public TwoSidedAttack {
 public:
  explicit SplitAttack(SplitStrategy s, std::optional<std::array<Position, 2>> at = std::nullopt)
      : TwoSidedAttack(std::move(at)), s_(std::move(s)) {
    s_.validate();
  }
  std::string id() const override { return "split"; }
  void install(RoundContext& ctx) override;

 private:
  SplitStrategy s_;
};

// d-dimensional reduction: one adversary on the V0-pos segment learns the
// shares of V2..Vd for free, measures in the Breidbart basis and answers
// every verifier directly.
class DdimBreidbartAttack : public ProverStrategy {
 public:
  explicit DdimBreidbartAttack(double fraction = 0.5) : fraction_(fraction) {}
  std::string id() const override { return "ddim_breidbart"; }
  std::vector<Position> positions(const Layout& layout) const override;
  PartyId receiver_for(std::size_t) const override { return kFirstAdversary; }
  void install(RoundContext& ctx) override;

 private:
  double fraction_;
};

// Symmetric basis at angle pi/8 between computational and Hadamard.
Matrix breidbart_basis();

// Exact acceptance probability of measuring in the Breidbart basis and
// answering with the outcome, by enumeration over theta, x and the outcome.
double breidbart_success_exact();

// Known ids: breidbart, random_basis, store_and_wait, forward,
// teleport_pre_shared, ddim_breidbart. Throws ConfigError otherwise.
StrategyFactory attack_factory(const std::string& id);

}  // namespace qpv
