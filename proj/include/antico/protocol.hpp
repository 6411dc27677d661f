#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "antico/crypto.hpp"
#include "antico/ledger.hpp"

namespace antico::protocol {

using AgentId = int;
using contract::Tick;

enum class CollusionBehavior { ResourceMonopoly, SpatialBlocking };
const char* to_string(CollusionBehavior b);
std::optional<CollusionBehavior> parse_behavior(const std::string& s);

struct ReportPayload {
  std::int64_t group_size;
  Tick report_time;
  crypto::Ring ring;
  crypto::KeyImage key_image;
  crypto::Point anon_address;

  Bytes encode() const;
  static ReportPayload decode(ByteView b);  // throws EncodingError
};

struct ReportSubmission {
  crypto::Envelope envelope;
  crypto::RingSignature signature;

  // What the ring signature covers.
  std::array<std::uint8_t, 32> signed_digest() const;
  Bytes encode() const;
  static ReportSubmission decode(ByteView b);
};

struct Evidence {
  CollusionBehavior behavior = CollusionBehavior::ResourceMonopoly;
  std::vector<AgentId> accused;
  Tick report_time = 0;

  Bytes encode() const;
  static Evidence decode(ByteView b);
};

struct EvidenceSubmission {
  contract::ContractId contract = 0;
  crypto::Envelope envelope;
  crypto::RingSignature signature;

  std::array<std::uint8_t, 32> signed_digest() const;
  Bytes encode() const;
  static EvidenceSubmission decode(ByteView b);
};

// What the whistleblower keeps between steps.
struct ReporterState {
  crypto::KeyPair keys;
  crypto::Ring ring;
  crypto::AnonAddress anon;
  std::int64_t group_size;
  Tick report_time;
};

struct BuiltReport {
  ReportSubmission submission;
  ReporterState state;
};

// The ring is every registered key, in an order shuffled with the caller's
// entropy. report_time is the tick the collusion is planned to start.
// Throws std::invalid_argument if the whistleblower is absent.
BuiltReport build_report(const crypto::KeyPair& whistleblower, std::int64_t group_size, Tick report_time,
                         const std::vector<crypto::Point>& all_pks, const crypto::Point& manager_pk,
                         crypto::Entropy& entropy);

EvidenceSubmission build_evidence(const ReporterState& reporter, contract::ContractId contract,
                                  const Evidence& evidence, const crypto::Point& manager_pk, crypto::Entropy& entropy);

class KeyImageRegistry {
 public:
  bool insert(const crypto::KeyImage& image) { return seen_.insert(image).second; }
  bool contains(const crypto::KeyImage& image) const { return seen_.count(image) != 0; }
  std::size_t size() const { return seen_.size(); }

 private:
  std::set<crypto::KeyImage> seen_;
};

// ---- observable behaviour ----

enum class ActionKind { Claim, Occupy, Defer, Complete };
const char* to_string(ActionKind k);

struct BehaviorEvent {
  Tick tick = 0;
  AgentId agent = 0;
  ActionKind kind = ActionKind::Claim;
  int task = -1;
  int station = -1;
  bool contested = false;    // claim made with at least two task durations on offer
  bool best = false;         // claim took the shortest task on offer
  bool coordinated = false;  // action used group priority or occupation
};

struct BehaviorLog {
  Tick begin = 0;
  Tick end = -1;  // last tick recorded, inclusive
  std::vector<BehaviorEvent> events;

  bool covers(Tick from, Tick to) const { return begin <= from && to <= end; }
};

struct VerifierConfig {
  Tick window = 50;
  double monopoly_threshold = 0.8;
  double blocking_threshold = 3;
  int min_evidence_claims = 3;
};

enum class Verdict { Valid, Invalid };

struct VerificationOutcome {
  Verdict verdict = Verdict::Invalid;
  Tick window_begin = 0;
  Tick window_end = 0;
  std::vector<std::pair<AgentId, double>> scores;
  std::optional<Tick> damage_onset;
  Tick receipt_tick = 0;
  std::string reason;
};

class InsufficientCoverage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scores the accused over [report_time, report_time + window].
VerificationOutcome score_evidence(const Evidence& evidence, const BehaviorLog& log, Tick receipt_tick,
                                   const VerifierConfig& cfg);

// ---- manager ----

enum class RejectReason { None, Malformed, BadSignature, DecryptFailure, ImageMismatch, DuplicateImage, GroupSize,
                          UnknownRingMember, RingSize, AddressReused };
const char* to_string(RejectReason r);

struct ReceiveResult {
  bool accepted = false;
  RejectReason reason = RejectReason::None;
  std::optional<contract::ContractId> contract;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProtocolStep {
  Tick tick = 0;
  std::string step;  // report, deploy, evidence, verify, enforce, reject
  std::optional<contract::ContractId> contract;
  std::string contract_address;
  std::string verdict;
  std::string detail;
};

class Manager {
 public:
  Manager(crypto::KeyPair keys, contract::Ledger& ledger, contract::Address address, Currency honesty_deposit,
          VerifierConfig cfg);

  // Registers an agent public key and its bond.
  void register_agent(AgentId id, const crypto::Point& pk, std::optional<contract::BondId> bond);
  const crypto::Point& public_key() const { return keys_.public_key; }
  std::vector<crypto::Point> registered_keys() const;

  ReceiveResult receive_report(const ReportSubmission& submission, Tick receipt);
  void receive_evidence(const EvidenceSubmission& submission, Tick receipt);  // throws ProtocolError
  VerificationOutcome verify_evidence(contract::ContractId c, const BehaviorLog& log);
  contract::Settlement enforce(contract::ContractId c, const VerificationOutcome& outcome);

  const KeyImageRegistry& registry() const { return registry_; }
  const std::vector<ProtocolStep>& steps() const { return steps_; }
  const contract::Address& address() const { return address_; }
  std::optional<Evidence> evidence_for(contract::ContractId c) const;

 private:
  struct Case {
    crypto::KeyImage image;
    std::int64_t group_size = 0;
    Tick report_time = 0;
    Tick receipt = 0;
    std::optional<crypto::Ring> ring;
    std::optional<Evidence> evidence;
    std::optional<VerificationOutcome> outcome;
    bool enforced = false;
  };

  void log_step(Tick t, const std::string& step, std::optional<contract::ContractId> c, const std::string& verdict,
                const std::string& detail);

  crypto::KeyPair keys_;
  contract::Ledger& ledger_;
  contract::Address address_;
  Currency d_h_;
  VerifierConfig cfg_;
  std::map<AgentId, crypto::Point> agent_keys_;
  std::map<AgentId, contract::BondId> bonds_;
  KeyImageRegistry registry_;
  std::map<contract::ContractId, Case> cases_;
  std::vector<std::set<AgentId>> settled_valid_;
  std::vector<ProtocolStep> steps_;
};

}  // namespace antico::protocol
