// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/crypto.hpp"
#include "bftchain/transaction.hpp"
#include "bftchain/types.hpp"

namespace bftchain
{

struct ExecContext
{
    BlockNum block = 0;
    std::uint32_t position = 0; // index of the transaction within its block
};

// Deterministic replicated application hosted by the chain. execute() must
// be total: invalid requests produce a recorded rejection result, never a
// missing one, so |results| always equals |transactions|.
class Application
{
  public:
    virtual ~Application() = default;

    // Stateless admission check (parse + signature); safe to run on the
    // verification pool concurrently with execution.
    virtual bool validate(Transaction const& tx) const = 0;

    virtual Bytes execute(Transaction const& tx, ExecContext const& ctx) = 0;

    virtual Bytes snapshotState() const = 0;
    virtual void restoreState(ByteSpan state) = 0;
    virtual crypto::Digest stateDigest() const = 0;
};

} // namespace bftchain
