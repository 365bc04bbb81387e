// Copyright 2026 the bftchain authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bftchain
{

// Process identifiers share one space: replicas use low ids, clients and
// join candidates use ids handed out by the deployment (convention in this
// codebase: clients start at 1000).
using ProcessId = std::uint32_t;
using ReplicaId = ProcessId;
using ClientId = ProcessId;

using ViewId = std::uint64_t;
using BlockNum = std::uint64_t;
using InstanceId = std::uint64_t; // consensus instance sequence number

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<std::uint8_t const>;

std::string toHex(ByteSpan data);
Bytes fromHex(std::string_view hex); // throws std::invalid_argument

inline Bytes toBytes(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

} // namespace bftchain
