#include "antico/ledger.hpp"

#include <algorithm>

namespace antico::contract {

namespace {

const char* kKindNames[] = {"mint", "transfer", "lock", "confiscate", "refund", "fund_reward", "payout", "reclaim"};

[[noreturn]] void fail(LedgerErrc code, const std::string& what) { throw LedgerError(code, what); }

}  // namespace

const char* to_string(TxKind k) { return kKindNames[static_cast<int>(k)]; }

std::optional<TxKind> parse_tx_kind(const std::string& s) {
  for (int i = 0; i < 8; ++i)
    if (s == kKindNames[i]) return static_cast<TxKind>(i);
  return std::nullopt;
}

const char* to_string(WbState s) {
  switch (s) {
    case WbState::Deployed: return "deployed";
    case WbState::Funded: return "funded";
    case WbState::EvidenceReceived: return "evidence_received";
    case WbState::ResolvedValid: return "resolved_valid";
    case WbState::ResolvedInvalid: return "resolved_invalid";
  }
  return "?";
}

Ledger::Ledger(LedgerConfig cfg, Tick start) : cfg_(cfg), now_(start) {
  if (cfg_.confirm_latency < 0 || cfg_.max_delay < 0 || cfg_.confirm_latency > cfg_.max_delay)
    fail(LedgerErrc::Config, "confirmation latency must lie in [0, max_delay]");
}

void Ledger::open_account(const Address& a) {
  if (a.empty() || a.is_contract() || a == Address::mint_source())
    fail(LedgerErrc::DuplicateAccount, "reserved address: " + a.str());
  if (!balances_.emplace(a, 0).second) fail(LedgerErrc::DuplicateAccount, "account exists: " + a.str());
}

Currency Ledger::balance(const Address& a) const {
  auto it = balances_.find(a);
  if (it == balances_.end()) fail(LedgerErrc::UnknownAccount, "unknown account: " + a.str());
  return it->second;
}

void Ledger::debit(const Address& a, Currency amount) {
  auto it = balances_.find(a);
  if (it == balances_.end()) fail(LedgerErrc::UnknownAccount, "unknown account: " + a.str());
  if (it->second < amount) fail(LedgerErrc::InsufficientFunds, "insufficient funds in " + a.str());
  it->second -= amount;
}

std::uint64_t Ledger::submit(TxKind kind, const Address& from, const Address& to, Currency amount, Hook hook,
                             std::uint32_t target) {
  if (amount <= 0) fail(LedgerErrc::InvalidAmount, "amount must be positive");
  if (!balances_.count(to)) fail(LedgerErrc::UnknownAccount, "unknown account: " + to.str());
  if (kind != TxKind::Mint) debit(from, amount);
  Pending p;
  p.tx.sequence = next_seq_++;
  p.tx.kind = kind;
  p.tx.from = from;
  p.tx.to = to;
  p.tx.amount = amount;
  p.tx.submit_tick = now_;
  p.due = now_ + cfg_.confirm_latency;
  p.hook = hook;
  p.target = target;
  const std::uint64_t seq = p.tx.sequence;
  if (cfg_.confirm_latency == 0)
    confirm(std::move(p));
  else
    pending_.push_back(std::move(p));
  return seq;
}

void Ledger::confirm(Pending p) {
  p.tx.confirm_tick = now_;
  balances_[p.tx.to] += p.tx.amount;
  if (p.tx.kind == TxKind::Mint) minted_ += p.tx.amount;
  switch (p.hook) {
    case Hook::BondLocked: bonds_[p.target].confirmed = true; break;
    case Hook::WbFunded: {
      auto& c = wbs_[p.target];
      c.state = WbState::Funded;
      c.t_rep = now_;
      break;
    }
    case Hook::WbDeposit: wbs_[p.target].deposit_held = p.tx.amount; break;
    case Hook::None: break;
  }
  confirmed_.push_back(std::move(p.tx));
}

void Ledger::confirm_due() {
  // pending_ is ordered by submission, and latency is uniform, so due ticks
  // are non-decreasing along the queue
  while (!pending_.empty() && pending_.front().due <= now_) {
    Pending p = std::move(pending_.front());
    pending_.pop_front();
    confirm(std::move(p));
  }
}

void Ledger::advance(Tick ticks) {
  if (ticks < 0) fail(LedgerErrc::Config, "time cannot move backwards");
  for (Tick i = 0; i < ticks; ++i) {
    ++now_;
    confirm_due();
  }
}

void Ledger::advance_to(Tick t) {
  if (t > now_) advance(t - now_);
}

void Ledger::settle_all() {
  while (!pending_.empty()) advance(1);
}

std::uint64_t Ledger::mint(const Address& to, Currency amount) {
  if (to.is_contract()) fail(LedgerErrc::UnknownAccount, "cannot mint into a contract");
  return submit(TxKind::Mint, Address::mint_source(), to, amount);
}

std::uint64_t Ledger::transfer(const Address& from, const Address& to, Currency amount) {
  if (from.is_contract() || to.is_contract())
    fail(LedgerErrc::WrongState, "contract escrows move only through contract operations");
  if (!balances_.count(from)) fail(LedgerErrc::UnknownAccount, "unknown account: " + from.str());
  return submit(TxKind::Transfer, from, to, amount);
}

BondingContract& Ledger::bond_mut(BondId id) {
  if (id >= bonds_.size()) fail(LedgerErrc::UnknownContract, "unknown bond " + std::to_string(id));
  return bonds_[id];
}

const BondingContract& Ledger::bond(BondId id) const { return const_cast<Ledger*>(this)->bond_mut(id); }

BondId Ledger::lock_bond(const Address& agent, Currency d_h) {
  if (d_h <= 0) fail(LedgerErrc::InvalidAmount, "bond amount must be positive");
  if (agent.is_contract()) fail(LedgerErrc::WrongSender, "contracts cannot bond");
  if (balance(agent) < d_h) fail(LedgerErrc::InsufficientFunds, "insufficient funds to bond " + agent.str());
  BondingContract b;
  b.id = static_cast<BondId>(bonds_.size());
  b.address = Address::bond(b.id);
  b.agent = agent;
  b.amount = d_h;
  balances_.emplace(b.address, 0);
  bonds_.push_back(b);
  submit(TxKind::Lock, agent, b.address, d_h, Hook::BondLocked, b.id);
  return b.id;
}

void Ledger::confiscate_bond(BondId id, const Address& manager) {
  auto& b = bond_mut(id);
  if (b.status != BondStatus::Locked) fail(LedgerErrc::AlreadySettled, "bond already settled");
  if (!b.confirmed) fail(LedgerErrc::WrongState, "bond lock not yet confirmed");
  if (!balances_.count(manager)) fail(LedgerErrc::UnknownAccount, "unknown account: " + manager.str());
  submit(TxKind::Confiscate, b.address, manager, b.amount);
  b.status = BondStatus::Confiscated;
}

void Ledger::refund_bond(BondId id) {
  auto& b = bond_mut(id);
  if (b.status != BondStatus::Locked) fail(LedgerErrc::AlreadySettled, "bond already settled");
  if (!b.confirmed) fail(LedgerErrc::WrongState, "bond lock not yet confirmed");
  submit(TxKind::Refund, b.address, b.agent, b.amount);
  b.status = BondStatus::Refunded;
}

WhistleblowerContract& Ledger::wb_mut(ContractId id) {
  if (id >= wbs_.size()) fail(LedgerErrc::UnknownContract, "unknown contract " + std::to_string(id));
  return wbs_[id];
}

const WhistleblowerContract& Ledger::wb(ContractId id) const { return const_cast<Ledger*>(this)->wb_mut(id); }

ContractId Ledger::deploy_wb_contract(const Address& manager, const Address& reporter, std::int64_t n_rep,
                                      Currency d_h) {
  if (n_rep < 1 || d_h <= 0) fail(LedgerErrc::InvalidAmount, "reward pool must be positive");
  if (reporter.is_contract() || reporter.empty()) fail(LedgerErrc::WrongSender, "bad reporter address");
  if (bound_reporters_.count(reporter)) fail(LedgerErrc::AddressReused, "anonymous address already used");
  const Currency pool = n_rep * d_h;
  if (balance(manager) < pool) fail(LedgerErrc::InsufficientFunds, "manager cannot fund the reward pool");
  if (!balances_.count(reporter)) balances_.emplace(reporter, 0);
  bound_reporters_.insert(reporter);

  WhistleblowerContract c;
  c.id = static_cast<ContractId>(wbs_.size());
  c.address = Address::wb(c.id);
  c.manager = manager;
  c.reporter = reporter;
  c.n_rep = n_rep;
  c.reward_pool = pool;
  c.required_deposit = d_h;
  c.deploy_tick = now_;
  balances_.emplace(c.address, 0);
  wbs_.push_back(c);
  submit(TxKind::FundReward, manager, c.address, pool, Hook::WbFunded, c.id);
  return c.id;
}

void Ledger::submit_reporting_deposit(ContractId id, const Address& from, Currency amount) {
  auto& c = wb_mut(id);
  if (c.state != WbState::Funded || c.deposit_submitted) fail(LedgerErrc::WrongState, "contract not awaiting deposit");
  if (from != c.reporter) fail(LedgerErrc::WrongSender, "deposit must come from the registered address");
  if (amount != c.required_deposit) fail(LedgerErrc::WrongAmount, "deposit must equal the honesty deposit");
  submit(TxKind::Transfer, from, c.address, amount, Hook::WbDeposit, c.id);
  c.deposit_submitted = true;
}

void Ledger::mark_evidence_received(ContractId id) {
  auto& c = wb_mut(id);
  if (c.state != WbState::Funded) fail(LedgerErrc::WrongState, "contract not funded");
  if (c.deposit_held != c.required_deposit) fail(LedgerErrc::DepositMissing, "reporting deposit not held");
  c.state = WbState::EvidenceReceived;
}

Settlement Ledger::resolve(ContractId id, Resolution outcome, std::span<const BondId> accused_bonds, Tick receipt_tick,
                           std::optional<Tick> t_d, const Address& manager) {
  auto& c = wb_mut(id);
  if (c.state == WbState::ResolvedValid || c.state == WbState::ResolvedInvalid)
    fail(LedgerErrc::AlreadySettled, "contract already resolved");
  if (c.state != WbState::EvidenceReceived) fail(LedgerErrc::WrongState, "no evidence received");
  if (manager != c.manager) fail(LedgerErrc::WrongSender, "only the deploying manager resolves");
  std::set<BondId> unique;
  for (BondId b : accused_bonds) {
    bond_mut(b);
    if (!unique.insert(b).second) fail(LedgerErrc::UnknownContract, "bond listed twice");
  }

  const bool eligible = !t_d || receipt_tick <= *t_d;
  Settlement s;
  s.contract = id;
  if (outcome == Resolution::Valid && eligible) {
    for (BondId b : accused_bonds) {
      const auto& bc = bonds_[b];
      if (bc.status != BondStatus::Locked || !bc.confirmed) fail(LedgerErrc::WrongState, "accused bond not locked");
    }
    for (BondId b : accused_bonds) {
      confiscate_bond(b, manager);
      s.transactions.push_back(next_seq_ - 1);
    }
    s.transactions.push_back(submit(TxKind::Payout, c.address, c.reporter, c.reward_pool));
    s.transactions.push_back(submit(TxKind::Refund, c.address, c.reporter, c.deposit_held));
    s.to_reporter = c.reward_pool + c.deposit_held;
    s.rewarded = true;
    c.state = WbState::ResolvedValid;
  } else if (outcome == Resolution::Superseded) {
    s.transactions.push_back(submit(TxKind::Refund, c.address, c.reporter, c.deposit_held));
    s.transactions.push_back(submit(TxKind::Reclaim, c.address, manager, c.reward_pool));
    s.to_reporter = c.deposit_held;
    s.to_manager = c.reward_pool;
    c.state = WbState::ResolvedInvalid;
  } else {
    s.transactions.push_back(submit(TxKind::Confiscate, c.address, manager, c.deposit_held));
    s.transactions.push_back(submit(TxKind::Reclaim, c.address, manager, c.reward_pool));
    s.to_manager = c.deposit_held + c.reward_pool;
    c.state = WbState::ResolvedInvalid;
  }
  s.state = c.state;
  return s;
}

Currency Ledger::in_flight() const {
  Currency total = 0;
  for (const auto& p : pending_)
    if (p.tx.kind != TxKind::Mint) total += p.tx.amount;
  return total;
}

Currency Ledger::total_value() const {
  Currency total = in_flight();
  for (const auto& [a, v] : balances_) total += v;
  return total;
}

void Ledger::check_invariants() const {
  for (const auto& [a, v] : balances_)
    if (v < 0) fail(LedgerErrc::InsufficientFunds, "negative balance at " + a.str());
  if (total_value() != minted_) fail(LedgerErrc::WrongState, "value not conserved");
  for (const auto& tx : confirmed_)
    if (tx.confirm_tick - tx.submit_tick > cfg_.max_delay) fail(LedgerErrc::WrongState, "confirmation delay exceeded");
  for (const auto& p : pending_)
    if (now_ - p.tx.submit_tick > cfg_.max_delay) fail(LedgerErrc::WrongState, "stale pending transaction");
}

void Ledger::export_csv(std::ostream& out) const {
  std::vector<const TxRecord*> rows;
  rows.reserve(confirmed_.size());
  for (const auto& tx : confirmed_) rows.push_back(&tx);
  std::sort(rows.begin(), rows.end(), [](const TxRecord* a, const TxRecord* b) {
    return a->submit_tick != b->submit_tick ? a->submit_tick < b->submit_tick : a->sequence < b->sequence;
  });
  out << "tick_submit,tick_confirm,kind,from,to,amount\n";
  for (const auto* tx : rows)
    out << tx->submit_tick << ',' << tx->confirm_tick << ',' << to_string(tx->kind) << ',' << tx->from.str() << ','
        << tx->to.str() << ',' << tx->amount << '\n';
}

}  // namespace antico::contract
