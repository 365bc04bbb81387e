// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftchain/codec.hpp"
#include "bftchain/crypto.hpp"
#include "bftchain/types.hpp"

namespace bftchain
{

enum class JoinPolicyKind : std::uint8_t
{
    ALLOW_ALL = 0,
    ALLOW_LIST = 1,
};

// Application-level setup carried opaquely in the genesis block: the
// addresses allowed to mint and the membership-admission policy.
struct AppConfig
{
    std::vector<crypto::PublicKey> minters;
    JoinPolicyKind joinPolicy = JoinPolicyKind::ALLOW_ALL;
    std::vector<ProcessId> joinAllowList;

    auto operator<=>(AppConfig const&) const = default;

    void
    encodeTo(Encoder& e) const
    {
        e.list(minters);
        e.u8(static_cast<std::uint8_t>(joinPolicy));
        if (joinAllowList.size() > 0xffffffffu)
        {
            throw CodecError("allow list too long");
        }
        e.u32(static_cast<std::uint32_t>(joinAllowList.size()));
        for (auto id : joinAllowList)
        {
            e.u32(id);
        }
    }

    static AppConfig
    decodeFrom(Decoder& d)
    {
        AppConfig c;
        c.minters = d.list<crypto::PublicKey>();
        auto kind = d.u8();
        if (kind > 1)
        {
            throw CodecError("unknown join policy");
        }
        c.joinPolicy = static_cast<JoinPolicyKind>(kind);
        auto n = d.u32();
        for (std::uint32_t i = 0; i < n; ++i)
        {
            c.joinAllowList.push_back(d.u32());
        }
        return c;
    }

    bool
    joinAllowed(ProcessId candidate) const
    {
        if (joinPolicy == JoinPolicyKind::ALLOW_ALL)
        {
            return true;
        }
        for (auto id : joinAllowList)
        {
            if (id == candidate)
            {
                return true;
            }
        }
        return false;
    }
};

} // namespace bftchain
