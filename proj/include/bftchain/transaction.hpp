// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/codec.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/types.hpp"

namespace bftchain
{

enum class TxKind : std::uint8_t
{
    APPLICATION = 0,
    RECONFIGURATION = 1,
};

// Ordered request envelope. (client, sequence) identifies a request for
// deduplication: sequence numbers are per-client and strictly increasing.
struct Transaction
{
    ClientId client = 0;
    std::uint64_t sequence = 0;
    TxKind kind = TxKind::APPLICATION;
    Bytes payload;

    auto operator<=>(Transaction const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u32(client);
        e.u64(sequence);
        e.u8(static_cast<std::uint8_t>(kind));
        e.bytes(payload);
    }

    static Transaction
    decodeFrom(Decoder& d)
    {
        Transaction tx;
        tx.client = d.u32();
        tx.sequence = d.u64();
        auto k = d.u8();
        if (k > 1)
        {
            throw CodecError("unknown transaction kind");
        }
        tx.kind = static_cast<TxKind>(k);
        tx.payload = d.bytes();
        return tx;
    }

    crypto::Digest
    digest() const
    {
        Encoder e;
        e.str("transaction");
        encodeTo(e);
        return crypto::sha256(e.data());
    }
};

// Execution outcome for one ordered transaction; recorded in the block body
// and echoed back to the issuing client.
struct TxResult
{
    ClientId client = 0;
    std::uint64_t sequence = 0;
    Bytes payload;

    auto operator<=>(TxResult const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.u32(client);
        e.u64(sequence);
        e.bytes(payload);
    }

    static TxResult
    decodeFrom(Decoder& d)
    {
        TxResult r;
        r.client = d.u32();
        r.sequence = d.u64();
        r.payload = d.bytes();
        return r;
    }
};

} // namespace bftchain
