#include "antico/protocol.hpp"

#include <algorithm>
#include <sstream>

namespace antico::protocol {

namespace {

constexpr std::string_view kReportDomain = "antico/v1/report";
constexpr std::string_view kEvidenceDomain = "antico/v1/evidence";

crypto::Point read_point(ByteReader& r) {
  auto p = crypto::Point::from_bytes(r.raw(crypto::kPointBytes));
  if (!p) throw EncodingError("non-canonical point");
  return *p;
}

std::string contract_hex(const crypto::Point& p) { return to_hex(p.bytes()); }

}  // namespace

const char* to_string(CollusionBehavior b) {
  return b == CollusionBehavior::ResourceMonopoly ? "RM" : "SB";
}

std::optional<CollusionBehavior> parse_behavior(const std::string& s) {
  if (s == "RM" || s == "rm" || s == "resource_monopoly") return CollusionBehavior::ResourceMonopoly;
  if (s == "SB" || s == "sb" || s == "spatial_blocking") return CollusionBehavior::SpatialBlocking;
  return std::nullopt;
}

const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Claim: return "claim";
    case ActionKind::Occupy: return "occupy";
    case ActionKind::Defer: return "defer";
    case ActionKind::Complete: return "complete";
  }
  return "?";
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::Malformed: return "malformed";
    case RejectReason::BadSignature: return "bad_signature";
    case RejectReason::DecryptFailure: return "decrypt_failure";
    case RejectReason::ImageMismatch: return "image_mismatch";
    case RejectReason::DuplicateImage: return "duplicate_key_image";
    case RejectReason::GroupSize: return "group_size";
    case RejectReason::UnknownRingMember: return "unknown_ring_member";
    case RejectReason::RingSize: return "ring_size";
    case RejectReason::AddressReused: return "address_reused";
  }
  return "?";
}

// ---- encodings ----

Bytes ReportPayload::encode() const {
  ByteWriter w;
  w.header('P').i64(group_size).i64(report_time).field(ring.encode());
  w.raw(key_image.point.bytes()).raw(anon_address.bytes());
  return w.take();
}

ReportPayload ReportPayload::decode(ByteView b) {
  ByteReader r(b);
  r.header('P');
  auto n = r.i64();
  auto t = r.i64();
  crypto::Ring ring = [&] {
    try {
      return crypto::Ring::decode(r.field());
    } catch (const std::invalid_argument& e) {
      throw EncodingError(e.what());
    }
  }();
  crypto::KeyImage ki{read_point(r)};
  auto anon = read_point(r);
  r.finish();
  return ReportPayload{n, t, std::move(ring), ki, anon};
}

std::array<std::uint8_t, 32> ReportSubmission::signed_digest() const {
  return crypto::digest(kReportDomain, envelope.encode());
}

Bytes ReportSubmission::encode() const {
  ByteWriter w;
  w.header('Q').field(envelope.encode()).field(signature.encode());
  return w.take();
}

ReportSubmission ReportSubmission::decode(ByteView b) {
  ByteReader r(b);
  r.header('Q');
  auto env = crypto::Envelope::decode(r.field());
  auto sig = crypto::RingSignature::decode(r.field());
  r.finish();
  return {std::move(env), std::move(sig)};
}

Bytes Evidence::encode() const {
  ByteWriter w;
  w.header('V').u8(static_cast<std::uint8_t>(behavior)).i64(report_time).u32(static_cast<std::uint32_t>(accused.size()));
  for (AgentId a : accused) w.u32(static_cast<std::uint32_t>(a));
  return w.take();
}

Evidence Evidence::decode(ByteView b) {
  ByteReader r(b);
  r.header('V');
  Evidence e;
  auto kind = r.u8();
  if (kind > 1) throw EncodingError("unknown behaviour");
  e.behavior = static_cast<CollusionBehavior>(kind);
  e.report_time = r.i64();
  auto n = r.u32();
  if (n > r.remaining() / 4) throw EncodingError("accused list truncated");
  for (std::uint32_t i = 0; i < n; ++i) e.accused.push_back(static_cast<AgentId>(r.u32()));
  r.finish();
  return e;
}

std::array<std::uint8_t, 32> EvidenceSubmission::signed_digest() const {
  ByteWriter w;
  w.u32(contract).field(envelope.encode());
  return crypto::digest(kEvidenceDomain, w.bytes());
}

Bytes EvidenceSubmission::encode() const {
  ByteWriter w;
  w.header('W').u32(contract).field(envelope.encode()).field(signature.encode());
  return w.take();
}

EvidenceSubmission EvidenceSubmission::decode(ByteView b) {
  ByteReader r(b);
  r.header('W');
  EvidenceSubmission s;
  s.contract = r.u32();
  s.envelope = crypto::Envelope::decode(r.field());
  s.signature = crypto::RingSignature::decode(r.field());
  r.finish();
  return s;
}

// ---- whistleblower side ----

BuiltReport build_report(const crypto::KeyPair& whistleblower, std::int64_t group_size, Tick report_time,
                         const std::vector<crypto::Point>& all_pks, const crypto::Point& manager_pk,
                         crypto::Entropy& entropy) {
  if (std::find(all_pks.begin(), all_pks.end(), whistleblower.public_key) == all_pks.end())
    throw std::invalid_argument("whistleblower key is not registered");
  std::vector<crypto::Point> members = all_pks;
  // Fisher-Yates driven by the entropy stream, so ring order carries no
  // information about the signer.
  for (std::size_t i = members.size(); i > 1; --i) {
    auto b = entropy.bytes(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    std::swap(members[i - 1], members[v % i]);
  }
  crypto::Ring ring(std::move(members));
  auto anon = crypto::anon_address(entropy);
  ReportPayload payload{group_size, report_time, ring, crypto::key_image(whistleblower), anon.address};

  ReportSubmission sub;
  sub.envelope = crypto::encrypt(manager_pk, payload.encode(), entropy);
  auto d = sub.signed_digest();
  sub.signature = crypto::ring_sign(d, ring, whistleblower, entropy);
  return {std::move(sub), ReporterState{whistleblower, std::move(ring), anon, group_size, report_time}};
}

EvidenceSubmission build_evidence(const ReporterState& reporter, contract::ContractId contract,
                                  const Evidence& evidence, const crypto::Point& manager_pk, crypto::Entropy& entropy) {
  EvidenceSubmission sub;
  sub.contract = contract;
  sub.envelope = crypto::encrypt(manager_pk, evidence.encode(), entropy);
  auto d = sub.signed_digest();
  sub.signature = crypto::ring_sign(d, reporter.ring, reporter.keys, entropy);
  return sub;
}

// ---- verification ----

VerificationOutcome score_evidence(const Evidence& evidence, const BehaviorLog& log, Tick receipt_tick,
                                   const VerifierConfig& cfg) {
  VerificationOutcome out;
  out.window_begin = evidence.report_time;
  out.window_end = evidence.report_time + cfg.window;
  out.receipt_tick = receipt_tick;
  if (!log.covers(out.window_begin, out.window_end)) {
    std::ostringstream os;
    os << "log covers [" << log.begin << "," << log.end << "], need [" << out.window_begin << "," << out.window_end
       << "]";
    throw InsufficientCoverage(os.str());
  }
  std::set<AgentId> accused(evidence.accused.begin(), evidence.accused.end());
  std::map<AgentId, int> contested, best;
  double occupied = 0;
  for (const auto& e : log.events) {
    if (!accused.count(e.agent)) continue;
    if (e.coordinated && e.tick <= out.window_end && (!out.damage_onset || e.tick < *out.damage_onset))
      out.damage_onset = e.tick;
    if (e.tick < out.window_begin || e.tick > out.window_end) continue;
    if (e.kind == ActionKind::Occupy) occupied += 1;
    if (e.kind == ActionKind::Claim && e.contested) {
      ++contested[e.agent];
      if (e.best) ++best[e.agent];
    }
  }

  bool all_pass = !evidence.accused.empty();
  for (AgentId a : evidence.accused) {
    double score = 0;
    double theta = 0;
    if (evidence.behavior == CollusionBehavior::ResourceMonopoly) {
      int c = contested[a];
      score = c >= cfg.min_evidence_claims ? static_cast<double>(best[a]) / c : 0.0;
      theta = cfg.monopoly_threshold;
    } else {
      score = occupied;
      theta = cfg.blocking_threshold;
    }
    out.scores.emplace_back(a, score);
    if (score < theta) all_pass = false;
  }
  const bool timely = !out.damage_onset || receipt_tick <= *out.damage_onset;
  if (!all_pass) {
    out.reason = "pattern below threshold";
  } else if (!timely) {
    out.reason = "report received after damage onset";
  } else {
    out.verdict = Verdict::Valid;
    out.reason = "pattern confirmed";
  }
  return out;
}

// ---- manager ----

Manager::Manager(crypto::KeyPair keys, contract::Ledger& ledger, contract::Address address, Currency honesty_deposit,
                 VerifierConfig cfg)
    : keys_(std::move(keys)), ledger_(ledger), address_(std::move(address)), d_h_(honesty_deposit), cfg_(cfg) {}

void Manager::register_agent(AgentId id, const crypto::Point& pk, std::optional<contract::BondId> bond) {
  for (const auto& [other, k] : agent_keys_)
    if (k == pk) throw ProtocolError("public key registered twice");
  if (!agent_keys_.emplace(id, pk).second) throw ProtocolError("agent registered twice");
  if (bond) bonds_[id] = *bond;
}

std::vector<crypto::Point> Manager::registered_keys() const {
  std::vector<crypto::Point> out;
  for (const auto& [id, pk] : agent_keys_) out.push_back(pk);
  return out;
}

void Manager::log_step(Tick t, const std::string& step, std::optional<contract::ContractId> c,
                       const std::string& verdict, const std::string& detail) {
  ProtocolStep s;
  s.tick = t;
  s.step = step;
  s.contract = c;
  if (c) s.contract_address = contract::Address::wb(*c).str();
  s.verdict = verdict;
  s.detail = detail;
  steps_.push_back(std::move(s));
}

ReceiveResult Manager::receive_report(const ReportSubmission& submission, Tick receipt) {
  auto reject = [&](RejectReason r) {
    log_step(receipt, "reject", std::nullopt, to_string(r), "report");
    return ReceiveResult{false, r, std::nullopt};
  };
  // The ring travels inside the ciphertext, so decryption precedes the
  // signature check.
  Bytes plain;
  try {
    plain = crypto::decrypt(keys_.secret, submission.envelope);
  } catch (const crypto::IntegrityError&) {
    return reject(RejectReason::DecryptFailure);
  } catch (const EncodingError&) {
    return reject(RejectReason::DecryptFailure);
  }
  std::optional<ReportPayload> payload;
  try {
    payload.emplace(ReportPayload::decode(plain));
  } catch (const EncodingError&) {
    return reject(RejectReason::Malformed);
  }
  if (!crypto::ring_verify(submission.signed_digest(), payload->ring, submission.signature))
    return reject(RejectReason::BadSignature);
  for (const auto& m : payload->ring.members()) {
    bool known = false;
    for (const auto& [id, pk] : agent_keys_) known = known || pk == m;
    if (!known) return reject(RejectReason::UnknownRingMember);
  }
  if (payload->ring.size() != agent_keys_.size()) return reject(RejectReason::RingSize);
  if (!(submission.signature.key_image == payload->key_image)) return reject(RejectReason::ImageMismatch);
  if (payload->group_size < 2 || payload->group_size > static_cast<std::int64_t>(agent_keys_.size()))
    return reject(RejectReason::GroupSize);
  if (registry_.contains(payload->key_image)) return reject(RejectReason::DuplicateImage);

  contract::ContractId id;
  try {
    id = ledger_.deploy_wb_contract(address_, contract::Address::anon(contract_hex(payload->anon_address)),
                                    payload->group_size, d_h_);
  } catch (const contract::LedgerError& e) {
    if (e.code() == contract::LedgerErrc::AddressReused) return reject(RejectReason::AddressReused);
    throw;
  }
  registry_.insert(payload->key_image);
  Case c;
  c.image = payload->key_image;
  c.group_size = payload->group_size;
  c.report_time = payload->report_time;
  c.receipt = receipt;
  c.ring = payload->ring;
  cases_.emplace(id, std::move(c));
  log_step(receipt, "report", id, "accepted", "n_rep=" + std::to_string(payload->group_size));
  log_step(receipt, "deploy", id, "", "reward_pool=" + std::to_string(ledger_.wb(id).reward_pool));
  return {true, RejectReason::None, id};
}

void Manager::receive_evidence(const EvidenceSubmission& submission, Tick receipt) {
  auto it = cases_.find(submission.contract);
  if (it == cases_.end()) throw ProtocolError("evidence for unknown contract");
  Case& c = it->second;
  if (c.evidence) throw ProtocolError("evidence already received");
  Bytes plain;
  try {
    plain = crypto::decrypt(keys_.secret, submission.envelope);
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("evidence does not decrypt: ") + e.what());
  }
  Evidence ev;
  try {
    ev = Evidence::decode(plain);
  } catch (const EncodingError& e) {
    throw ProtocolError(std::string("malformed evidence: ") + e.what());
  }
  // Same ring, same key image: the evidence comes from the reporter.
  if (!(submission.signature.key_image == c.image)) throw ProtocolError("evidence not linked to report");
  if (!crypto::ring_verify(submission.signed_digest(), *c.ring, submission.signature))
    throw ProtocolError("evidence signature does not verify");
  if (static_cast<std::int64_t>(ev.accused.size()) != c.group_size)
    throw ProtocolError("accused set size differs from reported group size");
  std::set<AgentId> uniq;
  for (AgentId a : ev.accused) {
    if (!agent_keys_.count(a)) throw ProtocolError("accused agent is not registered");
    if (!uniq.insert(a).second) throw ProtocolError("agent accused twice");
  }
  if (ev.report_time != c.report_time) throw ProtocolError("evidence report time differs from report");
  try {
    ledger_.mark_evidence_received(submission.contract);
  } catch (const contract::LedgerError& e) {
    throw ProtocolError(std::string("contract not ready: ") + e.what());
  }
  c.evidence = std::move(ev);
  log_step(receipt, "evidence", submission.contract, "", "accused=" + std::to_string(c.group_size));
}

VerificationOutcome Manager::verify_evidence(contract::ContractId id, const BehaviorLog& log) {
  auto it = cases_.find(id);
  if (it == cases_.end() || !it->second.evidence) throw ProtocolError("no evidence for contract");
  auto out = score_evidence(*it->second.evidence, log, it->second.receipt, cfg_);
  it->second.outcome = out;
  log_step(log.end, "verify", id, out.verdict == Verdict::Valid ? "valid" : "invalid", out.reason);
  return out;
}

contract::Settlement Manager::enforce(contract::ContractId id, const VerificationOutcome& outcome) {
  auto it = cases_.find(id);
  if (it == cases_.end() || !it->second.evidence) throw ProtocolError("no evidence for contract");
  Case& c = it->second;
  if (c.enforced) throw ProtocolError("contract already enforced");
  const auto& accused = c.evidence->accused;

  auto resolution = outcome.verdict == Verdict::Valid ? contract::Resolution::Valid : contract::Resolution::Invalid;
  if (resolution == contract::Resolution::Valid) {
    for (const auto& prior : settled_valid_)
      for (AgentId a : accused)
        if (prior.count(a)) resolution = contract::Resolution::Superseded;
  }
  std::vector<contract::BondId> bonds;
  if (resolution == contract::Resolution::Valid) {
    for (AgentId a : accused) {
      auto it = bonds_.find(a);
      if (it == bonds_.end()) continue;
      const auto& b = ledger_.bond(it->second);
      // A bond already withdrawn cannot be seized.
      if (b.status == contract::BondStatus::Locked && b.confirmed) bonds.push_back(b.id);
    }
  }
  auto s = ledger_.resolve(id, resolution, bonds, c.receipt, outcome.damage_onset, address_);
  c.enforced = true;
  if (s.rewarded) settled_valid_.emplace_back(accused.begin(), accused.end());
  std::string verdict = resolution == contract::Resolution::Superseded ? "superseded" : (s.rewarded ? "valid" : "invalid");
  log_step(ledger_.now(), "enforce", id, verdict,
           "to_reporter=" + std::to_string(s.to_reporter) + " to_manager=" + std::to_string(s.to_manager));
  return s;
}

std::optional<Evidence> Manager::evidence_for(contract::ContractId id) const {
  auto it = cases_.find(id);
  if (it == cases_.end()) return std::nullopt;
  return it->second.evidence;
}

}  // namespace antico::protocol
