#include "antico/transcript.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace antico {

using nlohmann::json;

Transcript make_transcript(std::map<std::string, std::string> header, const std::vector<protocol::ProtocolStep>& steps,
                           const contract::Ledger& ledger) {
  Transcript t;
  t.header = std::move(header);
  t.steps = steps;
  t.transactions = ledger.confirmed();
  std::sort(t.transactions.begin(), t.transactions.end(),
            [](const auto& a, const auto& b) { return a.sequence < b.sequence; });
  for (const auto& [addr, v] : ledger.balances()) t.balances[addr.str()] = v;
  t.max_delay = ledger.config().max_delay;
  return t;
}

void write_transcript(std::ostream& out, const Transcript& t) {
  json h = {{"type", "episode"}, {"max_delay", t.max_delay}};
  for (const auto& [k, v] : t.header) h[k] = v;
  out << h.dump() << '\n';
  for (const auto& s : t.steps) {
    json j = {{"type", "step"}, {"tick", s.tick}, {"step", s.step}, {"contract", s.contract_address},
              {"verdict", s.verdict}, {"detail", s.detail}};
    out << j.dump() << '\n';
  }
  for (const auto& tx : t.transactions) {
    json j = {{"type", "tx"},       {"seq", tx.sequence},         {"kind", contract::to_string(tx.kind)},
              {"from", tx.from.str()}, {"to", tx.to.str()},       {"amount", tx.amount},
              {"submit", tx.submit_tick}, {"confirm", tx.confirm_tick}};
    out << j.dump() << '\n';
  }
  for (const auto& [addr, v] : t.balances) out << json{{"type", "balance"}, {"account", addr}, {"amount", v}}.dump() << '\n';
}

Transcript read_transcript(std::istream& in) {
  Transcript t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "episode") {
        have_header = true;
        t.max_delay = j.at("max_delay").get<contract::Tick>();
        for (auto it = j.begin(); it != j.end(); ++it)
          if (it.value().is_string() && it.key() != "type") t.header[it.key()] = it.value().get<std::string>();
      } else if (type == "step") {
        protocol::ProtocolStep s;
        s.tick = j.at("tick");
        s.step = j.at("step");
        s.contract_address = j.at("contract");
        s.verdict = j.at("verdict");
        s.detail = j.value("detail", "");
        t.steps.push_back(std::move(s));
      } else if (type == "tx") {
        contract::TxRecord tx;
        tx.sequence = j.at("seq");
        auto kind = contract::parse_tx_kind(j.at("kind"));
        if (!kind) throw std::runtime_error("unknown transaction kind");
        tx.kind = *kind;
        tx.from = contract::Address::parse(j.at("from"));
        tx.to = contract::Address::parse(j.at("to"));
        tx.amount = j.at("amount");
        tx.submit_tick = j.at("submit");
        tx.confirm_tick = j.at("confirm");
        t.transactions.push_back(tx);
      } else if (type == "balance") {
        t.balances[j.at("account")] = j.at("amount").get<Currency>();
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("transcript line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw std::runtime_error("transcript has no episode header");
  return t;
}

AuditReport audit_transcript(const Transcript& t) {
  AuditReport r;
  auto violate = [&](const std::string& v) {
    r.ok = false;
    r.violations.push_back(v);
  };

  // protocol state machine, per contract
  static const std::vector<std::string> order = {"report", "deploy", "evidence", "verify", "enforce"};
  std::map<std::string, std::size_t> progress;
  contract::Tick last_tick = 0;
  for (const auto& s : t.steps) {
    std::ostringstream line;
    line << "t=" << s.tick << ' ' << s.step;
    if (!s.contract_address.empty()) line << ' ' << s.contract_address;
    if (!s.verdict.empty()) line << ' ' << s.verdict;
    if (!s.detail.empty()) line << " (" << s.detail << ')';
    r.timeline.push_back(line.str());
    if (s.tick < last_tick) violate("step at tick " + std::to_string(s.tick) + " is out of order");
    last_tick = std::max(last_tick, s.tick);
    if (s.step == "reject") continue;
    auto pos = std::find(order.begin(), order.end(), s.step);
    if (pos == order.end()) {
      violate("unknown step '" + s.step + "'");
      continue;
    }
    auto idx = static_cast<std::size_t>(pos - order.begin());
    auto& done = progress[s.contract_address];
    if (idx != done) violate(s.contract_address + ": step '" + s.step + "' out of sequence");
    done = std::max(done, idx + 1);
  }

  // value conservation
  std::map<std::string, Currency> replay;
  Currency minted = 0;
  std::map<std::string, int> payouts;
  for (const auto& tx : t.transactions) {
    if (tx.amount < 0) violate("negative amount in transaction " + std::to_string(tx.sequence));
    if (tx.confirm_tick < tx.submit_tick || tx.confirm_tick - tx.submit_tick > t.max_delay)
      violate("transaction " + std::to_string(tx.sequence) + " confirmed outside the delay bound");
    if (tx.kind == contract::TxKind::Mint) {
      minted += tx.amount;
    } else {
      replay[tx.from.str()] -= tx.amount;
    }
    replay[tx.to.str()] += tx.amount;
    if (tx.kind == contract::TxKind::Payout && ++payouts[tx.from.str()] > 1)
      violate(tx.from.str() + " paid out twice");
  }
  Currency total = 0;
  for (const auto& [acct, v] : t.balances) {
    total += v;
    if (v < 0) violate("negative balance for " + acct);
    auto it = replay.find(acct);
    Currency expect = it == replay.end() ? 0 : it->second;
    if (expect != v)
      violate("balance of " + acct + " is " + std::to_string(v) + ", transactions give " + std::to_string(expect));
  }
  for (const auto& [acct, v] : replay)
    if (v != 0 && !t.balances.count(acct)) violate("account " + acct + " missing from final balances");
  if (total != minted)
    violate("balances sum to " + std::to_string(total) + " but " + std::to_string(minted) + " was minted");
  return r;
}

}  // namespace antico
