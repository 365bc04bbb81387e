// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/app.hpp"
#include "bftchain/block.hpp"
#include "bftchain/codec.hpp"
#include "bftchain/reconfig.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/view.hpp"

#include <map>
#include <vector>

namespace bftchain
{

// Deterministic transaction execution shared by live replicas and the
// offline ledger verifier. Any divergence between the two would make honest
// ledgers unverifiable, so both route every state change through here.

// Last executed request per client: duplicate filter and reply cache in one.
// The cached result lets a replica answer a client retransmission after the
// original replies were lost (say, to a crash right at reply emission).
struct ClientRecord
{
    std::uint64_t lastSequence = 0;
    BlockNum block = 0;
    std::uint32_t position = 0;
    Bytes resultPayload;

    auto operator<=>(ClientRecord const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u64(lastSequence);
        e.u64(block);
        e.u32(position);
        e.bytes(resultPayload);
    }

    static ClientRecord
    decodeFrom(Decoder& d)
    {
        ClientRecord r;
        r.lastSequence = d.u64();
        r.block = d.u64();
        r.position = d.u32();
        r.resultPayload = d.bytes();
        return r;
    }
};

struct ExecutionState
{
    std::map<ClientId, ClientRecord> clients;

    bool
    isFresh(ClientId client, std::uint64_t sequence) const
    {
        auto it = clients.find(client);
        return it == clients.end() || sequence > it->second.lastSequence;
    }

    // Plain sequence map for reconfiguration batch validation.
    std::map<ClientId, std::uint64_t> sequenceView() const;
};

// Pinned result payloads for transactions the application never sees.
Bytes const& duplicateRejectionPayload();
Bytes const& invalidTransactionPayload();

// Executes an application batch in order. Total: stale or malformed
// transactions are recorded with the pinned rejection payloads, never
// skipped, so |results| always equals |transactions|.
std::vector<TxResult> executeAppBatch(ExecutionState& state, Application& app,
                                      BlockNum block, Batch const& batch);

// Executes a reconfiguration batch under an already-validated plan,
// producing per-transaction results carrying the successor view.
std::vector<TxResult>
executeReconfigBatch(ExecutionState& state, BlockNum block, Batch const& batch,
                     reconfig::ReconfigPlan const& plan);

// Proposal admission applied by every correct replica before voting to
// write an application batch: nonempty, application transactions only,
// per-client sequences strictly increasing within the batch and fresh
// against the executed prefix, and each transaction valid per the
// application (which must be pure and thread-safe here -- admission may run
// on a verification pool).
bool appBatchAdmissible(ExecutionState const& state, Application& app,
                        Batch const& batch);

// Snapshot payload and digest over the full replica-visible state: the
// client table plus the application state.
Bytes replicaStatePayload(ExecutionState const& state, Application& app);
crypto::Digest replicaStateDigest(ExecutionState const& state,
                                  Application& app);
void restoreReplicaState(ExecutionState& state, Application& app,
                         ByteSpan payload);

} // namespace bftchain
