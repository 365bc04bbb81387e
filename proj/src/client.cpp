// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/client.hpp"

#include <stdexcept>

namespace bftchain
{

ClientSession::ClientSession(ClientConfig config, ClientEnv& env)
    : mConfig(std::move(config))
    , mEnv(env)
    , mBelievedF(mConfig.genesis.initialView.f)
{
}

std::uint64_t
ClientSession::submit(Bytes payload)
{
    Transaction tx;
    tx.client = mConfig.self;
    tx.sequence = mSeqIssued + 1;
    tx.kind = TxKind::APPLICATION;
    tx.payload = std::move(payload);
    submitTransaction(std::move(tx));
    return mSeqIssued;
}

void
ClientSession::submitTransaction(Transaction tx)
{
    if (mPending)
    {
        throw std::logic_error("client already has a transaction in flight");
    }
    if (tx.client != mConfig.self || tx.sequence != mSeqIssued + 1)
    {
        throw std::logic_error("transaction does not continue this client's "
                               "sequence");
    }
    mSeqIssued = tx.sequence;
    Pending pending;
    pending.tx = std::move(tx);
    pending.sentAtUs = mEnv.nowUs();
    mPending = std::move(pending);
    broadcastSubmit();
    mEnv.armTimer(0, mConfig.retryTimeoutUs);
}

void
ClientSession::broadcastSubmit()
{
    SubmitMsg sub;
    sub.tx = mPending->tx;
    WireMessage msg;
    msg.type = MsgType::SUBMIT;
    msg.sender = mConfig.self;
    msg.view = 0;
    msg.body = encodeToBytes(sub);
    for (auto to : mConfig.replicas)
    {
        mEnv.sendMessage(to, msg);
    }
}

void
ClientSession::onMessage(WireMessage const& msg)
{
    if (msg.type != MsgType::REPLY)
    {
        return;
    }
    ReplyMsg reply;
    try
    {
        reply = parseBody<ReplyMsg>(msg);
    }
    catch (CodecError const&)
    {
        return;
    }
    if (reply.client != mConfig.self)
    {
        return;
    }
    auto encoded = encodeToBytes(reply);
    if (!mPending || reply.sequence != mPending->tx.sequence)
    {
        // A straggler confirming an already-committed outcome still counts
        // toward that outcome's replication tally.
        auto it = mCommitted.find(reply.sequence);
        if (it != mCommitted.end() && it->second.first == encoded)
        {
            it->second.second.insert(msg.sender);
        }
        return;
    }
    auto& votes = mPending->votes[encoded];
    votes.insert(msg.sender);
    if (votes.size() < static_cast<std::size_t>(mBelievedF) + 1)
    {
        return;
    }
    // More voices than the fault bound agree on every byte: committed. The
    // reply also teaches us the fault bound now in force.
    mBelievedF = reply.viewF;
    Commit commit;
    commit.sequence = reply.sequence;
    commit.block = reply.block;
    commit.position = reply.position;
    commit.result = reply.result;
    commit.latencyUs = mEnv.nowUs() - mPending->sentAtUs;
    mCommitted[reply.sequence] = {std::move(encoded), votes};
    mPending.reset();
    mEnv.cancelTimer(0);
    if (onCommitted)
    {
        onCommitted(commit);
    }
}

std::uint32_t
ClientSession::matchesFor(std::uint64_t sequence) const
{
    auto it = mCommitted.find(sequence);
    return it == mCommitted.end()
               ? 0
               : static_cast<std::uint32_t>(it->second.second.size());
}

void
ClientSession::onTimer(std::uint32_t token)
{
    if (token != 0 || !mPending)
    {
        return;
    }
    ++mRetransmits;
    broadcastSubmit();
    mEnv.armTimer(0, mConfig.retryTimeoutUs);
}

} // namespace bftchain
