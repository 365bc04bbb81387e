// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftchain/coin.hpp"

#include <set>

namespace bftchain::coin
{

crypto::Digest
CoinRequest::signingDigest(ClientId client, std::uint64_t sequence) const
{
    Encoder e;
    e.str("coin-request");
    e.u32(client);
    e.u64(sequence);
    e.u8(static_cast<std::uint8_t>(op));
    e.obj(issuer);
    e.list(inputs);
    e.list(outputs);
    e.bytes(padding);
    return crypto::sha256(e.data());
}

Transaction
makeCoinTransaction(ClientId client, std::uint64_t sequence,
                    crypto::PermanentKeypair const& issuer, CoinOp op,
                    std::vector<crypto::Digest> inputs,
                    std::vector<CoinOutput> outputs)
{
    CoinRequest req;
    req.op = op;
    req.issuer = issuer.publicKey;
    req.inputs = std::move(inputs);
    req.outputs = std::move(outputs);

    Transaction tx;
    tx.client = client;
    tx.sequence = sequence;
    tx.kind = TxKind::APPLICATION;

    // Measure the unpadded transaction, then grow the padding so the
    // serialized envelope lands exactly on the profile target (when the
    // request is already larger — e.g. many outputs — no padding is added).
    tx.payload = encodeToBytes(req);
    auto unpadded = encodeToBytes(tx).size();
    auto target = op == CoinOp::MINT ? MINT_TX_TARGET_BYTES
                                     : SPEND_TX_TARGET_BYTES;
    if (unpadded < target)
    {
        req.padding.assign(target - unpadded, 0);
    }
    req.signature = issuer.sign(req.signingDigest(client, sequence));
    tx.payload = encodeToBytes(req);
    return tx;
}

char const*
nameOf(CoinStatus s)
{
    switch (s)
    {
    case CoinStatus::OK:
        return "ok";
    case CoinStatus::REJECT_MALFORMED:
        return "rejected: malformed request";
    case CoinStatus::REJECT_BAD_SIGNATURE:
        return "rejected: bad signature";
    case CoinStatus::REJECT_NOT_MINTER:
        return "rejected: issuer not authorized to mint";
    case CoinStatus::REJECT_MISSING_INPUT:
        return "rejected: input coin missing or already spent";
    case CoinStatus::REJECT_NOT_OWNER:
        return "rejected: input coin not owned by issuer";
    case CoinStatus::REJECT_VALUE_MISMATCH:
        return "rejected: input and output values differ";
    case CoinStatus::REJECT_NO_OUTPUTS:
        return "rejected: no outputs";
    case CoinStatus::REJECT_DUPLICATE_INPUT:
        return "rejected: duplicate input coin";
    }
    return "rejected: unknown status";
}

crypto::Digest
coinId(BlockNum block, std::uint32_t position, std::uint32_t outputIndex)
{
    Encoder e;
    e.str("coin-id");
    e.u64(block);
    e.u32(position);
    e.u32(outputIndex);
    return crypto::sha256(e.data());
}

CoinApp::CoinApp(AppConfig config) : mConfig(std::move(config))
{
}

bool
CoinApp::validate(Transaction const& tx) const
{
    if (tx.kind != TxKind::APPLICATION)
    {
        return false;
    }
    try
    {
        auto req = decodeFromBytes<CoinRequest>(tx.payload);
        return crypto::verify(req.issuer,
                              req.signingDigest(tx.client, tx.sequence),
                              req.signature);
    }
    catch (CodecError const&)
    {
        return false;
    }
}

Bytes
CoinApp::execute(Transaction const& tx, ExecContext const& ctx)
{
    CoinResult result;
    try
    {
        auto req = decodeFromBytes<CoinRequest>(tx.payload);
        if (!crypto::verify(req.issuer,
                            req.signingDigest(tx.client, tx.sequence),
                            req.signature))
        {
            result.status = CoinStatus::REJECT_BAD_SIGNATURE;
        }
        else
        {
            result = apply(req, tx, ctx);
        }
        auto target = req.op == CoinOp::MINT ? MINT_RESULT_TARGET_BYTES
                                             : SPEND_RESULT_TARGET_BYTES;
        auto unpadded = encodeToBytes(result).size();
        if (unpadded < target)
        {
            result.padding.assign(target - unpadded, 0);
        }
    }
    catch (CodecError const&)
    {
        result.status = CoinStatus::REJECT_MALFORMED;
    }
    return encodeToBytes(result);
}

CoinResult
CoinApp::apply(CoinRequest const& req, Transaction const& tx,
               ExecContext const& ctx)
{
    CoinResult result;
    if (req.outputs.empty())
    {
        result.status = CoinStatus::REJECT_NO_OUTPUTS;
        return result;
    }
    for (auto const& out : req.outputs)
    {
        if (out.value == 0)
        {
            result.status = CoinStatus::REJECT_MALFORMED;
            return result;
        }
    }

    if (req.op == CoinOp::MINT)
    {
        if (!req.inputs.empty())
        {
            result.status = CoinStatus::REJECT_MALFORMED;
            return result;
        }
        bool authorized = false;
        for (auto const& m : mConfig.minters)
        {
            if (m == req.issuer)
            {
                authorized = true;
                break;
            }
        }
        if (!authorized)
        {
            result.status = CoinStatus::REJECT_NOT_MINTER;
            return result;
        }
        // Minting authorization restricts who may create value, not where it
        // lands; outputs may name any owner.
        for (std::uint32_t i = 0; i < req.outputs.size(); ++i)
        {
            auto id = coinId(ctx.block, ctx.position, i);
            mUtxos[id] = req.outputs[i];
            result.coinIds.push_back(id);
        }
        return result;
    }

    // SPEND
    if (req.inputs.empty())
    {
        result.status = CoinStatus::REJECT_MALFORMED;
        return result;
    }
    std::set<crypto::Digest> seen;
    std::uint64_t inSum = 0;
    for (auto const& in : req.inputs)
    {
        if (!seen.insert(in).second)
        {
            result.status = CoinStatus::REJECT_DUPLICATE_INPUT;
            return result;
        }
        auto it = mUtxos.find(in);
        if (it == mUtxos.end())
        {
            result.status = CoinStatus::REJECT_MISSING_INPUT;
            return result;
        }
        if (it->second.owner != req.issuer)
        {
            result.status = CoinStatus::REJECT_NOT_OWNER;
            return result;
        }
        inSum += it->second.value;
    }
    std::uint64_t outSum = 0;
    for (auto const& out : req.outputs)
    {
        outSum += out.value;
    }
    if (inSum != outSum)
    {
        result.status = CoinStatus::REJECT_VALUE_MISMATCH;
        return result;
    }
    for (auto const& in : req.inputs)
    {
        mUtxos.erase(in);
    }
    for (std::uint32_t i = 0; i < req.outputs.size(); ++i)
    {
        auto id = coinId(ctx.block, ctx.position, i);
        mUtxos[id] = req.outputs[i];
        result.coinIds.push_back(id);
    }
    return result;
}

Bytes
CoinApp::snapshotState() const
{
    Encoder e;
    if (mUtxos.size() > 0xffffffffu)
    {
        throw CodecError("utxo set too large");
    }
    e.u32(static_cast<std::uint32_t>(mUtxos.size()));
    for (auto const& [id, out] : mUtxos)
    {
        e.obj(id);
        e.obj(out);
    }
    return e.take();
}

void
CoinApp::restoreState(ByteSpan state)
{
    Decoder d(state);
    std::map<crypto::Digest, CoinOutput> restored;
    auto n = d.u32();
    for (std::uint32_t i = 0; i < n; ++i)
    {
        auto id = d.obj<crypto::Digest>();
        auto out = d.obj<CoinOutput>();
        restored.emplace(id, out);
    }
    d.expectDone();
    mUtxos = std::move(restored);
}

crypto::Digest
CoinApp::stateDigest() const
{
    Encoder e;
    e.str("coin-state");
    e.bytes(snapshotState());
    return crypto::sha256(e.data());
}

std::uint64_t
CoinApp::totalValue() const
{
    std::uint64_t sum = 0;
    for (auto const& [id, out] : mUtxos)
    {
        sum += out.value;
    }
    return sum;
}

std::size_t
CoinApp::utxoCount() const
{
    return mUtxos.size();
}

} // namespace bftchain::coin
