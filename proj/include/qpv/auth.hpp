#pragma once

// Position-based message authentication on top of BB84 position
// verification: the weak one-bit scheme (the prover may answer with the
// erasure tag kBottom when authenticating a 0), the strong scheme that runs
// it over every bit of a dominating codeword with a sliding-window count of
// erasures, and key exchange whose verifier-to-prover messages are echoed
// back authenticated.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpv/protocols.hpp"

namespace qpv {

inline constexpr int kDagger = -1;  // padding symbol in embeddings

using Codeword = std::vector<int>;   // bits
using Embedding = std::vector<int>;  // symbols in {-1, 0, 1}, length 2N

struct AuthParams {
  double q = 0.0;                 // erasure probability for 0-bits
  std::size_t lambda = 1;
  double pv_soundness = 0.89;     // soundness of the underlying PV round
  std::size_t window() const { return 4 * lambda; }
  double threshold() const { return 8.0 * q * static_cast<double>(lambda); }
  // 0 < q < (1 - pv_soundness) / 8, lambda >= 1. Throws ConfigError.
  void validate() const;
  // q at the middle of the admissible interval.
  static AuthParams with_default_q(std::size_t lambda, double pv_soundness = 0.89);
};

// ---------------------------------------------------------------- wAUTH

struct WauthResult {
  std::optional<int> tag;  // what V0 received (0, 1 or kBottom)
  ProtocolVerdict verdict;
};

// One weak-authentication round. `m_verifier` is the bit the verifiers
// expect; the strategy decides what the prover side does.
WauthResult wauth_round(int m_verifier, ProverStrategy& prover, const AuthParams& params, const Layout& layout,
                        const TimingConfig& cfg, AdversaryModel model, Rng& rng);

// Honest prover authenticating bit m.
std::unique_ptr<ProverStrategy> wauth_prover(int m, const AuthParams& params);

// Substitution attack: the honest prover authenticates c while adversaries
// on the verifier-prover segments relay its tags, replacing kBottom by a
// common random bit when `replace_bottom` is set.
class SubstitutionRelay : public ProverStrategy {
 public:
  SubstitutionRelay(int c, const AuthParams& params, bool replace_bottom)
      : c_(c), q_(c == 0 ? params.q : 0.0), replace_(replace_bottom) {}
  std::string id() const override { return "substitution_relay"; }
  std::vector<Position> positions(const Layout& layout) const override;
  PartyId receiver_for(std::size_t) const override { return kHonestProver; }
  void install(RoundContext& ctx) override;

 private:
  int c_;
  double q_;
  bool replace_;
};

// delta = 1 - q (1 - eps). Throws std::invalid_argument outside 0 < q < 1,
// 0 <= eps < 1.
double wauth_substitution_bound(double q, double eps);

// ---------------------------------------------------------------- codes

bool is_embedding(const Embedding& e, const Codeword& c);

// Blocks 0^ell 1^ell for message bit 0 and 1^ell 0^ell for 1.
struct BalancedRepetitionCode {
  std::size_t ell = 1;
  std::size_t mu = 1;
  std::size_t length() const { return 2 * ell * mu; }
  Codeword encode(const std::vector<int>& message) const;
  std::vector<Codeword> codewords() const;  // all 2^mu, message order
};

// Condition (a): #{i : e'_i = 1 and e_i < 1} >= lambda.
std::size_t hard_ones(const Embedding& e, const Embedding& e_prime);
// Condition (b) maximized over consecutive index ranges. Taking the whole
// range is never worse, so it reduces to N >= 4 lambda and
// #{i : e'_i != -1 and e_i = -1} >= lambda.
std::size_t impersonated(const Embedding& e, const Embedding& e_prime);
bool dominance_holds(const Embedding& e, const Embedding& e_prime, std::size_t lambda);

enum class DominationVerdict { Dominates, Counterexample, BudgetExhausted };

struct DominationResult {
  DominationVerdict verdict = DominationVerdict::Dominates;
  std::optional<std::pair<Embedding, Embedding>> witness;  // (e, e')
  std::uint64_t explored = 0;
  std::string method;  // "exhaustive" or "search"
};

inline constexpr std::size_t kExhaustiveCap = 16;  // on 2N

// Whether c' lambda-dominates c. Enumerates every embedding pair when
// 2N <= exhaustive_cap, otherwise runs an exact search over aligned
// prefixes that gives up after `budget` state expansions.
DominationResult dominates(const Codeword& c, const Codeword& c_prime, std::size_t lambda,
                           std::uint64_t budget = 50'000'000, std::size_t exhaustive_cap = kExhaustiveCap);
DominationResult dominates_exhaustive(const Codeword& c, const Codeword& c_prime, std::size_t lambda);
DominationResult dominates_search(const Codeword& c, const Codeword& c_prime, std::size_t lambda,
                                  std::uint64_t budget);

// Every ordered pair of distinct codewords.
DominationResult code_dominates(const std::vector<Codeword>& code, std::size_t lambda,
                                std::uint64_t budget = 50'000'000, std::size_t exhaustive_cap = kExhaustiveCap);

// ---------------------------------------------------------------- AUTH

enum class AuthAction { Impersonate = 1, Substitute = 2, FastForward = 3 };
using Schedule = std::vector<AuthAction>;

// What the coalition does in each action. A null adversary stands for an
// honest prover and admits only Substitute actions.
class AuthAdversary {
 public:
  virtual ~AuthAdversary() = default;
  virtual std::unique_ptr<ProverStrategy> impersonate(int c_prime, const AuthParams& params) = 0;
  virtual std::unique_ptr<ProverStrategy> substitute(int c, int c_prime, const AuthParams& params) = 0;
};

// Breidbart measure-and-relay for impersonations; relays the honest tags in
// substitutions, guessing whenever a kBottom would be rejected.
class DesyncAdversary : public AuthAdversary {
 public:
  std::unique_ptr<ProverStrategy> impersonate(int c_prime, const AuthParams& params) override;
  std::unique_ptr<ProverStrategy> substitute(int c, int c_prime, const AuthParams& params) override;
};

// n_bot(j) = #{i in [j - 4 lambda, j] : c_i = 0 and t_i = kBottom}, 1-based.
std::size_t n_bottom(const Codeword& c, const std::vector<int>& tags, std::size_t j, std::size_t lambda);

struct AuthResult {
  bool accept = false;
  bool completed = false;        // the verifiers ran every bit of their codeword
  std::optional<std::size_t> failed_at;  // 1-based verifier index
  std::string reason;
  std::vector<int> tags;         // verifier side, -1 where no tag arrived
  Embedding e, e_prime;          // induced by the executed schedule
  std::size_t wauth_rounds = 0;  // rounds the verifiers took part in
};

// The prover authenticates c, the verifiers expect c_prime; the schedule
// interleaves their executions. Prover bits left over at the end are
// fast-forwarded. Throws std::invalid_argument when the schedule runs past
// either codeword.
AuthResult auth_run(const Codeword& c, const Codeword& c_prime, const AuthParams& params, const Schedule& schedule,
                    AuthAdversary* adversary, const Layout& layout, const TimingConfig& cfg, Rng& rng);

// Honest schedule: N substitutions of each bit by itself.
Schedule aligned_schedule(std::size_t n);
// Impersonate c'_1, then run the prover one bit behind the verifiers and
// impersonate the verifiers' last bit.
Schedule desync_schedule(std::size_t n);
Schedule random_schedule(std::size_t n, Rng& rng);

// Message-level wrapper with validation (code must be lambda-dominating up
// to the search budget; the check is skipped for long codes by the caller
// passing check_code = false).
AuthResult auth_message(const std::vector<int>& m, const std::vector<int>& m_prime,
                        const BalancedRepetitionCode& code, const AuthParams& params, const Schedule& schedule,
                        AuthAdversary* adversary, const Layout& layout, const TimingConfig& cfg, Rng& rng);

// ---------------------------------------------------------------- key exchange

struct KeyExchangeParams {
  std::size_t raw_rounds = 256;
  AuthParams auth{1e-9, 1};
  std::size_t ell = 4;
};

struct KeyExchangeResult {
  std::vector<int> verifier_key;  // empty on abort
  std::vector<int> prover_key;
  bool auth_accept = false;
  std::size_t sifted = 0;
  std::optional<std::size_t> tampered_index;  // basis bit flipped in transit
  std::size_t wauth_rounds = 0;
  // Error correction and privacy amplification are the identity here.
  static constexpr const char* kPostProcessing = "identity (noiseless channel)";
};

// BB84 raw phase from V0 to the prover over the simulated channel, then the
// prover announces its bases and echoes V0's bases; the verifiers check the
// pair with AUTH and sift. With `tamper` one of V0's basis bits is flipped
// on its way to the prover.
KeyExchangeResult key_exchange(const Layout& layout, const TimingConfig& cfg, const KeyExchangeParams& params,
                               bool tamper, Rng& rng);

std::string to_hex(const std::vector<int>& bits);

}  // namespace qpv
