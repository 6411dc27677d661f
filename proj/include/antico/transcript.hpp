#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "antico/ledger.hpp"
#include "antico/protocol.hpp"

namespace antico {

// Everything an auditor needs to replay one episode.
struct Transcript {
  std::map<std::string, std::string> header;
  std::vector<protocol::ProtocolStep> steps;
  std::vector<contract::TxRecord> transactions;
  std::map<std::string, Currency> balances;  // final, per account
  contract::Tick max_delay = 1;
};

Transcript make_transcript(std::map<std::string, std::string> header, const std::vector<protocol::ProtocolStep>& steps,
                           const contract::Ledger& ledger);

// JSON lines: one header record, then steps, transactions and balances.
void write_transcript(std::ostream& out, const Transcript& t);
// Throws std::runtime_error with the line number on corrupt input.
Transcript read_transcript(std::istream& in);

struct AuditReport {
  bool ok = true;
  std::vector<std::string> timeline;
  std::vector<std::string> violations;
};

// Replays transactions against the final balances and checks the protocol
// state machine of every contract.
AuditReport audit_transcript(const Transcript& t);

}  // namespace antico
