// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Field-sensitive data-flow integrity for MiniC programs.
//!
//! The pipeline has a static and a dynamic half:
//!
//! * [`frontend`] parses and type-checks MiniC and computes C-conventional
//!   object layouts split into field slots.
//! * [`ir`] lowers the program so that every memory write is a numbered
//!   definition site and every memory read a numbered use site.
//! * [`vfa`] runs a field-sensitive inclusion-based points-to analysis and
//!   derives, for every use site, the set of definition sites allowed to be
//!   the last writer of the bytes it reads.
//! * [`runtime`] executes the IR over a byte-accurate size-class arena,
//!   recording the last writer of every field slot and checking each read
//!   against its legal set.

pub mod frontend;
pub mod ir;
pub mod runtime;
pub mod vfa;
