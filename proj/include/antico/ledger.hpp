#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "antico/economy.hpp"

namespace antico::contract {

using Tick = std::int64_t;
using BondId = std::uint32_t;
using ContractId = std::uint32_t;

class Address {
 public:
  Address() = default;
  static Address agent(int id) { return Address("agent:" + std::to_string(id)); }
  static Address manager() { return Address("manager"); }
  static Address mixer() { return Address("mixer"); }
  static Address sink() { return Address("sink"); }
  static Address mint_source() { return Address("mint"); }
  static Address anon(const std::string& hex) { return Address("anon:" + hex); }
  static Address bond(BondId id) { return Address("bond:" + std::to_string(id)); }
  static Address wb(ContractId id) { return Address("wb:" + std::to_string(id)); }
  static Address parse(const std::string& s) { return Address(s); }

  const std::string& str() const { return value_; }
  bool is_contract() const { return value_.rfind("bond:", 0) == 0 || value_.rfind("wb:", 0) == 0; }
  bool empty() const { return value_.empty(); }

  friend bool operator==(const Address& a, const Address& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Address& a, const Address& b) { return a.value_ != b.value_; }
  friend bool operator<(const Address& a, const Address& b) { return a.value_ < b.value_; }

 private:
  explicit Address(std::string v) : value_(std::move(v)) {}
  std::string value_;
};

enum class TxKind { Mint, Transfer, Lock, Confiscate, Refund, FundReward, Payout, Reclaim };
const char* to_string(TxKind k);
std::optional<TxKind> parse_tx_kind(const std::string& s);

struct TxRecord {
  std::uint64_t sequence = 0;
  TxKind kind = TxKind::Transfer;
  Address from, to;
  Currency amount = 0;
  Tick submit_tick = 0;
  Tick confirm_tick = -1;
};

enum class LedgerErrc {
  DuplicateAccount,
  UnknownAccount,
  InvalidAmount,
  InsufficientFunds,
  WrongState,
  WrongAmount,
  WrongSender,
  DepositMissing,
  AlreadySettled,
  AddressReused,
  UnknownContract,
  Config,
};

class LedgerError : public std::runtime_error {
 public:
  LedgerError(LedgerErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  LedgerErrc code() const { return code_; }

 private:
  LedgerErrc code_;
};

enum class BondStatus { Locked, Refunded, Confiscated };

struct BondingContract {
  BondId id = 0;
  Address address;
  Address agent;
  Currency amount = 0;
  BondStatus status = BondStatus::Locked;
  bool confirmed = false;  // escrow has received the lock transfer
};

enum class WbState { Deployed, Funded, EvidenceReceived, ResolvedValid, ResolvedInvalid };
const char* to_string(WbState s);

struct WhistleblowerContract {
  ContractId id = 0;
  Address address;
  Address manager;
  Address reporter;
  std::int64_t n_rep = 0;
  Currency reward_pool = 0;
  Currency required_deposit = 0;
  Currency deposit_held = 0;
  bool deposit_submitted = false;
  Tick deploy_tick = 0;
  std::optional<Tick> t_rep;  // funding confirmation tick
  WbState state = WbState::Deployed;
};

enum class Resolution { Valid, Invalid, Superseded };

struct Settlement {
  ContractId contract = 0;
  WbState state = WbState::ResolvedInvalid;
  bool rewarded = false;
  Currency to_reporter = 0;
  Currency to_manager = 0;
  std::vector<std::uint64_t> transactions;
};

struct LedgerConfig {
  Tick confirm_latency = 1;  // ticks between submission and confirmation
  Tick max_delay = 1;        // the bound every confirmation must respect
};

class Ledger {
 public:
  explicit Ledger(LedgerConfig cfg = {}, Tick start = 0);

  Tick now() const { return now_; }
  const LedgerConfig& config() const { return cfg_; }

  void open_account(const Address& a);
  bool has_account(const Address& a) const { return balances_.count(a) != 0; }
  Currency balance(const Address& a) const;
  const std::map<Address, Currency>& balances() const { return balances_; }

  std::uint64_t mint(const Address& to, Currency amount);
  std::uint64_t transfer(const Address& from, const Address& to, Currency amount);

  BondId lock_bond(const Address& agent, Currency d_h);
  void confiscate_bond(BondId id, const Address& manager);
  void refund_bond(BondId id);
  const BondingContract& bond(BondId id) const;

  ContractId deploy_wb_contract(const Address& manager, const Address& reporter, std::int64_t n_rep, Currency d_h);
  void submit_reporting_deposit(ContractId id, const Address& from, Currency amount);
  void mark_evidence_received(ContractId id);
  Settlement resolve(ContractId id, Resolution outcome, std::span<const BondId> accused_bonds, Tick receipt_tick,
                     std::optional<Tick> t_d, const Address& manager);
  const WhistleblowerContract& wb(ContractId id) const;
  std::size_t wb_count() const { return wbs_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }

  // Moves time forward, confirming everything that falls due.
  void advance(Tick ticks = 1);
  void advance_to(Tick t);
  void settle_all();

  std::size_t pending_count() const { return pending_.size(); }
  Currency in_flight() const;
  Currency total_minted() const { return minted_; }
  // Σ balances (escrows included) + in-flight value.
  Currency total_value() const;
  // Throws LedgerError if conservation, non-negativity or the delay bound fail.
  void check_invariants() const;

  const std::vector<TxRecord>& confirmed() const { return confirmed_; }
  void export_csv(std::ostream& out) const;

 private:
  enum class Hook { None, BondLocked, WbFunded, WbDeposit };
  struct Pending {
    TxRecord tx;
    Tick due = 0;
    Hook hook = Hook::None;
    std::uint32_t target = 0;
  };

  std::uint64_t submit(TxKind kind, const Address& from, const Address& to, Currency amount, Hook hook = Hook::None,
                       std::uint32_t target = 0);
  void confirm(Pending p);
  void confirm_due();
  void debit(const Address& a, Currency amount);
  BondingContract& bond_mut(BondId id);
  WhistleblowerContract& wb_mut(ContractId id);

  LedgerConfig cfg_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  Currency minted_ = 0;
  std::map<Address, Currency> balances_;
  std::deque<Pending> pending_;
  std::vector<TxRecord> confirmed_;
  std::vector<BondingContract> bonds_;
  std::vector<WhistleblowerContract> wbs_;
  std::set<Address> bound_reporters_;
};

}  // namespace antico::contract
