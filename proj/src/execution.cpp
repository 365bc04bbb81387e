// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/execution.hpp"

namespace bftchain
{

std::map<ClientId, std::uint64_t>
ExecutionState::sequenceView() const
{
    std::map<ClientId, std::uint64_t> out;
    for (auto const& [client, rec] : clients)
    {
        out.emplace(client, rec.lastSequence);
    }
    return out;
}

Bytes const&
duplicateRejectionPayload()
{
    static Bytes const payload = [] {
        Encoder e;
        e.str("rejected-duplicate");
        return e.take();
    }();
    return payload;
}

Bytes const&
invalidTransactionPayload()
{
    static Bytes const payload = [] {
        Encoder e;
        e.str("rejected-invalid");
        return e.take();
    }();
    return payload;
}

namespace
{

void
recordResult(ExecutionState& state, Transaction const& tx, BlockNum block,
             std::uint32_t position, Bytes payload,
             std::vector<TxResult>& results)
{
    auto& rec = state.clients[tx.client];
    rec.lastSequence = tx.sequence;
    rec.block = block;
    rec.position = position;
    rec.resultPayload = payload;
    results.push_back({tx.client, tx.sequence, std::move(payload)});
}

} // namespace

std::vector<TxResult>
executeAppBatch(ExecutionState& state, Application& app, BlockNum block,
                Batch const& batch)
{
    std::vector<TxResult> results;
    results.reserve(batch.transactions.size());
    for (std::uint32_t p = 0; p < batch.transactions.size(); ++p)
    {
        auto const& tx = batch.transactions[p];
        if (!state.isFresh(tx.client, tx.sequence))
        {
            results.push_back(
                {tx.client, tx.sequence, duplicateRejectionPayload()});
            continue;
        }
        if (tx.kind != TxKind::APPLICATION)
        {
            recordResult(state, tx, block, p, invalidTransactionPayload(),
                         results);
            continue;
        }
        recordResult(state, tx, block, p, app.execute(tx, {block, p}),
                     results);
    }
    return results;
}

std::vector<TxResult>
executeReconfigBatch(ExecutionState& state, BlockNum block, Batch const& batch,
                     reconfig::ReconfigPlan const& plan)
{
    Bytes viewBytes = encodeToBytes(plan.newView);
    std::vector<TxResult> results;
    results.reserve(batch.transactions.size());
    for (std::uint32_t p = 0; p < batch.transactions.size(); ++p)
    {
        auto const& tx = batch.transactions[p];
        if (!state.isFresh(tx.client, tx.sequence))
        {
            results.push_back(
                {tx.client, tx.sequence, duplicateRejectionPayload()});
            continue;
        }
        bool accepted =
            p < plan.txAccepted.size() && plan.txAccepted[p];
        reconfig::ReconfigResult r;
        r.accepted = accepted;
        if (accepted)
        {
            r.newViewBytes = viewBytes;
        }
        recordResult(state, tx, block, p, encodeToBytes(r), results);
    }
    return results;
}

bool
appBatchAdmissible(ExecutionState const& state, Application& app,
                   Batch const& batch)
{
    if (batch.kind != BatchKind::APPLICATION || batch.transactions.empty())
    {
        return false;
    }
    std::map<ClientId, std::uint64_t> highest = state.sequenceView();
    for (auto const& tx : batch.transactions)
    {
        if (tx.kind != TxKind::APPLICATION)
        {
            return false;
        }
        auto it = highest.find(tx.client);
        if (it != highest.end() && tx.sequence <= it->second)
        {
            return false;
        }
        highest[tx.client] = tx.sequence;
        if (!app.validate(tx))
        {
            return false;
        }
    }
    return true;
}

Bytes
replicaStatePayload(ExecutionState const& state, Application& app)
{
    Encoder e;
    e.u32(static_cast<std::uint32_t>(state.clients.size()));
    for (auto const& [client, rec] : state.clients)
    {
        e.u32(client);
        e.obj(rec);
    }
    e.bytes(app.snapshotState());
    return e.take();
}

crypto::Digest
replicaStateDigest(ExecutionState const& state, Application& app)
{
    Encoder e;
    e.str("replica-state");
    e.bytes(replicaStatePayload(state, app));
    return crypto::sha256(e.data());
}

void
restoreReplicaState(ExecutionState& state, Application& app, ByteSpan payload)
{
    Decoder d(payload);
    std::map<ClientId, ClientRecord> clients;
    auto count = d.u32();
    for (std::uint32_t i = 0; i < count; ++i)
    {
        auto client = d.u32();
        clients[client] = d.obj<ClientRecord>();
    }
    Bytes appState = d.bytes();
    d.expectDone();
    app.restoreState(appState);
    state.clients = std::move(clients);
}

} // namespace bftchain
