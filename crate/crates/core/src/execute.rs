//! Call-plan synthesis from an ABI and deterministic execution on revm.

use alloy_dyn_abi::{DynSolType, DynSolValue, Specifier};
use alloy_json_abi::Function;
use alloy_primitives::{Address, B256, I256, U256};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revm::context::result::{ExecutionResult, HaltReason, Output};
use revm::context::{Context, TxEnv};
use revm::database::{CacheDB, EmptyDB};
use revm::primitives::{hardfork::SpecId, Bytes, TxKind};
use revm::{ExecuteCommitEvm, MainBuilder, MainContext};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compile::{CompiledArtifact, HexBytes};

pub const DEFAULT_ROUNDS: u32 = 3;
pub const GAS_LIMIT: u64 = 1 << 31;

/// Fixed sender pool; index 0 also deploys.
const SENDERS: [Address; 4] = [
    Address::repeat_byte(0x10),
    Address::repeat_byte(0x20),
    Address::repeat_byte(0x30),
    Address::repeat_byte(0x40),
];

const LENGTHS: [usize; 5] = [0, 1, 31, 32, 33];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEnv {
    pub block_number: u64,
    pub timestamp: u64,
    pub chain_id: u64,
    pub coinbase: Address,
    pub gas_limit: u64,
    /// Balance given to every sender, in wei.
    pub initial_balance: U256,
}

impl Default for ChainEnv {
    fn default() -> Self {
        ChainEnv {
            block_number: 1,
            timestamp: 1,
            chain_id: 1,
            coinbase: Address::repeat_byte(0xc0),
            gas_limit: GAS_LIMIT,
            initial_balance: U256::from(10u64).pow(U256::from(24u64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedCall {
    pub function: String,
    pub selector: HexBytes,
    pub calldata: HexBytes,
    pub sender: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFunction {
    pub function: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallPlan {
    pub seed: u64,
    pub rounds: u32,
    pub env: ChainEnv,
    pub calls: Vec<PlannedCall>,
    pub skipped: Vec<SkippedFunction>,
}

impl CallPlan {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(crate::canonical_json(self).as_bytes()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("malformed ABI: {0}")]
    Abi(String),
    #[error("EVM fault: {0}")]
    Evm(String),
}

/// One plan per (ABI, seed, rounds). Functions keep ABI declaration order within a round.
pub fn plan_calls(abi: &serde_json::Value, seed: u64, rounds: u32) -> Result<CallPlan, ExecError> {
    let items = abi.as_array().ok_or_else(|| ExecError::Abi("ABI is not an array".into()))?;
    let mut functions = Vec::new();
    let mut skipped = Vec::new();
    for item in items.iter().filter(|i| i["type"] == "function") {
        let f: Function = serde_json::from_value(item.clone()).map_err(|e| ExecError::Abi(e.to_string()))?;
        let types: Result<Vec<DynSolType>, String> =
            f.inputs.iter().map(|p| p.resolve().map_err(|e| e.to_string())).collect();
        match types.and_then(|t| supported(&t).map(|()| t)) {
            Ok(types) => functions.push((f, types)),
            Err(reason) => skipped.push(SkippedFunction { function: f.signature(), reason }),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut calls = Vec::with_capacity(functions.len() * rounds as usize);
    for round in 0..rounds {
        for (f, types) in &functions {
            let args: Vec<DynSolValue> = types.iter().map(|t| arbitrary(t, &mut rng, round, 0)).collect();
            let mut calldata = f.selector().to_vec();
            calldata.extend(DynSolValue::Tuple(args).abi_encode_params());
            let sender = SENDERS[rng.random_range(0..SENDERS.len())];
            calls.push(PlannedCall {
                function: f.signature(),
                selector: HexBytes(f.selector().to_vec()),
                calldata: HexBytes(calldata),
                sender,
            });
        }
    }
    Ok(CallPlan { seed, rounds, env: ChainEnv::default(), calls, skipped })
}

fn supported(types: &[DynSolType]) -> Result<(), String> {
    fn check(t: &DynSolType) -> Result<(), String> {
        match t {
            DynSolType::Function => Err("function-type parameter".into()),
            DynSolType::Array(inner) | DynSolType::FixedArray(inner, _) => check(inner),
            DynSolType::Tuple(ts) => ts.iter().try_for_each(check),
            _ => Ok(()),
        }
    }
    types.iter().try_for_each(check)
}

fn uint_max(bits: usize) -> U256 {
    U256::MAX >> (256 - bits)
}

fn random_word(rng: &mut ChaCha8Rng) -> U256 {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    U256::from_be_bytes(b)
}

fn random_bytes(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

fn arbitrary(t: &DynSolType, rng: &mut ChaCha8Rng, round: u32, depth: usize) -> DynSolValue {
    // nested dynamic containers stay small so calldata does not explode
    let length = |rng: &mut ChaCha8Rng| if depth == 0 { LENGTHS[rng.random_range(0..LENGTHS.len())] } else { rng.random_range(0..3) };
    match t {
        DynSolType::Bool => DynSolValue::Bool(round.is_multiple_of(2)),
        DynSolType::Uint(bits) => {
            let max = uint_max(*bits);
            let v = match rng.random_range(0..6) {
                0 => U256::ZERO,
                1 => U256::from(1),
                2 => U256::from(2),
                3 => max,
                4 => max - U256::from(1),
                _ => random_word(rng) & max,
            };
            DynSolValue::Uint(v, *bits)
        }
        DynSolType::Int(bits) => {
            let max = I256::from_raw(uint_max(*bits - 1));
            let min = -max - I256::ONE;
            let v = match rng.random_range(0..8) {
                0 => I256::ZERO,
                1 => I256::ONE,
                2 => I256::try_from(2).expect("small"),
                3 => max,
                4 => max - I256::ONE,
                5 => min,
                6 => I256::MINUS_ONE,
                _ => {
                    let raw = random_word(rng) & uint_max(*bits);
                    if *bits < 256 && raw > uint_max(*bits - 1) {
                        I256::from_raw(raw) - I256::from_raw(U256::from(1) << *bits)
                    } else {
                        I256::from_raw(raw)
                    }
                }
            };
            DynSolValue::Int(v, *bits)
        }
        DynSolType::Address => DynSolValue::Address(SENDERS[rng.random_range(0..SENDERS.len())]),
        DynSolType::FixedBytes(n) => {
            let mut word = [0u8; 32];
            match rng.random_range(0..3) {
                0 => {}
                1 => word[..*n].fill(0xff),
                _ => rng.fill_bytes(&mut word[..*n]),
            }
            DynSolValue::FixedBytes(B256::from(word), *n)
        }
        DynSolType::Bytes => {
            let n = length(rng);
            DynSolValue::Bytes(random_bytes(rng, n))
        }
        DynSolType::String => {
            let n = length(rng);
            DynSolValue::String((0..n).map(|_| rng.random_range(b'a'..=b'z') as char).collect())
        }
        DynSolType::Array(inner) => {
            let n = length(rng);
            DynSolValue::Array((0..n).map(|_| arbitrary(inner, rng, round, depth + 1)).collect())
        }
        DynSolType::FixedArray(inner, n) => {
            DynSolValue::FixedArray((0..*n).map(|_| arbitrary(inner, rng, round, depth + 1)).collect())
        }
        DynSolType::Tuple(ts) => DynSolValue::Tuple(ts.iter().map(|t| arbitrary(t, rng, round, depth + 1)).collect()),
        DynSolType::Function => unreachable!("filtered by supported()"),
    }
}

/// Terminal state of a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Success,
    Revert,
    OutOfGas,
    /// Exceptional halt other than out-of-gas.
    Failure { kind: String },
}

impl Status {
    fn of_halt(reason: &HaltReason) -> Status {
        match reason {
            HaltReason::OutOfGas(_) => Status::OutOfGas,
            other => Status::Failure { kind: format!("{other:?}") },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeployOutcome {
    #[serde(flatten)]
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<HexBytes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub topics: Vec<B256>,
    pub data: HexBytes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub function: String,
    pub selector: HexBytes,
    #[serde(flatten)]
    pub status: Status,
    pub return_data: HexBytes,
    pub logs: Vec<LogRecord>,
    pub storage_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub plan_hash: String,
    pub skipped: Vec<SkippedFunction>,
    pub deploy: DeployOutcome,
    pub calls: Vec<CallRecord>,
}

impl ExecutionTrace {
    pub fn deployed(&self) -> bool {
        self.deploy.status == Status::Success
    }
}

type Evm = revm::handler::MainnetEvm<revm::handler::MainnetContext<CacheDB<EmptyDB>>>;

fn new_evm(env: &ChainEnv) -> Evm {
    let mut db = CacheDB::<EmptyDB>::default();
    for s in SENDERS {
        db.insert_account_info(s, revm::state::AccountInfo { balance: env.initial_balance, ..Default::default() });
    }
    let env = env.clone();
    Context::mainnet()
        .modify_cfg_chained(|cfg| {
            cfg.spec = SpecId::PRAGUE;
            cfg.chain_id = env.chain_id;
            cfg.limit_contract_code_size = Some(usize::MAX);
            cfg.limit_contract_initcode_size = Some(usize::MAX);
            cfg.tx_gas_limit_cap = Some(u64::MAX);
        })
        .modify_block_chained(|b| {
            b.number = U256::from(env.block_number);
            b.timestamp = U256::from(env.timestamp);
            b.beneficiary = env.coinbase;
            b.gas_limit = env.gas_limit.saturating_mul(2);
            b.basefee = 0;
            b.prevrandao = Some(B256::ZERO);
        })
        .with_db(db)
        .build_mainnet()
}

fn nonce(evm: &Evm, who: Address) -> u64 {
    evm.ctx.journaled_state.database.cache.accounts.get(&who).map_or(0, |a| a.info.nonce)
}

/// Hash over every non-zero storage slot of every account, sorted.
fn storage_digest(evm: &Evm) -> String {
    let mut slots: Vec<(Address, U256, U256)> = evm
        .ctx
        .journaled_state
        .database
        .cache
        .accounts
        .iter()
        .flat_map(|(a, acc)| acc.storage.iter().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (*a, *k, *v)))
        .collect();
    slots.sort();
    let mut h = Sha256::new();
    for (a, k, v) in slots {
        h.update(a);
        h.update(k.to_be_bytes::<32>());
        h.update(v.to_be_bytes::<32>());
    }
    hex::encode(h.finalize())
}

fn transact(evm: &mut Evm, env: &ChainEnv, sender: Address, kind: TxKind, data: Vec<u8>) -> Result<ExecutionResult, ExecError> {
    let tx = TxEnv::builder()
        .caller(sender)
        .kind(kind)
        .data(Bytes::from(data))
        .gas_limit(env.gas_limit)
        .gas_price(0)
        .nonce(nonce(evm, sender))
        .chain_id(Some(env.chain_id))
        .value(U256::ZERO)
        .build()
        .map_err(|e| ExecError::Evm(format!("{e:?}")))?;
    evm.transact_commit(tx).map_err(|e| ExecError::Evm(e.to_string()))
}

/// Deploys the artifact and replays the plan against one persistent instance.
pub fn run(artifact: &CompiledArtifact, plan: &CallPlan) -> Result<ExecutionTrace, ExecError> {
    let env = &plan.env;
    let mut evm = new_evm(env);
    let deployer = SENDERS[0];
    let created = transact(&mut evm, env, deployer, TxKind::Create, artifact.deploy_bytecode.0.clone())?;
    let (deploy, target) = match created {
        ExecutionResult::Success { output: Output::Create(_, Some(addr)), .. } => {
            (DeployOutcome { status: Status::Success, data: None }, Some(addr))
        }
        ExecutionResult::Success { .. } => {
            (DeployOutcome { status: Status::Failure { kind: "NoAddress".into() }, data: None }, None)
        }
        ExecutionResult::Revert { output, .. } => {
            (DeployOutcome { status: Status::Revert, data: Some(HexBytes(output.to_vec())) }, None)
        }
        ExecutionResult::Halt { reason, .. } => (DeployOutcome { status: Status::of_halt(&reason), data: None }, None),
    };
    let mut calls = Vec::new();
    if let Some(target) = target {
        for call in &plan.calls {
            let result = transact(&mut evm, env, call.sender, TxKind::Call(target), call.calldata.0.clone())?;
            let (status, return_data, logs) = match result {
                ExecutionResult::Success { output, logs, .. } => (Status::Success, output.into_data().to_vec(), logs),
                ExecutionResult::Revert { output, .. } => (Status::Revert, output.to_vec(), Vec::new()),
                ExecutionResult::Halt { reason, .. } => (Status::of_halt(&reason), Vec::new(), Vec::new()),
            };
            calls.push(CallRecord {
                function: call.function.clone(),
                selector: call.selector.clone(),
                status,
                return_data: HexBytes(return_data),
                logs: logs
                    .into_iter()
                    .map(|l| LogRecord { topics: l.data.topics().to_vec(), data: HexBytes(l.data.data.to_vec()) })
                    .collect(),
                storage_digest: storage_digest(&evm),
            });
        }
    }
    Ok(ExecutionTrace { plan_hash: plan.hash(), skipped: plan.skipped.clone(), deploy, calls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn abi_f_uint() -> serde_json::Value {
        json!([{ "type": "function", "name": "f", "inputs": [{ "name": "x", "type": "uint256" }],
                 "outputs": [], "stateMutability": "nonpayable" }])
    }

    #[test]
    fn plan_is_deterministic_per_seed() {
        let a = plan_calls(&abi_f_uint(), 4, 3).unwrap();
        assert_eq!(a, plan_calls(&abi_f_uint(), 4, 3).unwrap());
        assert_eq!(a.calls.len(), 3);
        assert!(a.calls.iter().all(|c| c.function == "f(uint256)"));
        assert_eq!(a.hash(), plan_calls(&abi_f_uint(), 4, 3).unwrap().hash());
    }

    #[test]
    fn plan_json_is_lowercase_hex() {
        let json = crate::canonical_json(&plan_calls(&abi_f_uint(), 2, 1).unwrap());
        assert!(json.contains("\"0xc0c0c0c0c0c0c0c0c0c0c0c0c0c0c0c0c0c0c0c0\""), "{json}");
        assert_eq!(json, json.to_lowercase());
    }

    #[test]
    fn empty_abi_plans_no_calls() {
        let p = plan_calls(&json!([{ "type": "constructor", "inputs": [], "stateMutability": "nonpayable" }]), 1, 3).unwrap();
        assert!(p.calls.is_empty());
    }

    #[test]
    fn uint8_pool_reaches_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seen: Vec<DynSolValue> = (0..200).map(|r| arbitrary(&DynSolType::Uint(8), &mut rng, r, 0)).collect();
        assert!(seen.contains(&DynSolValue::Uint(U256::from(255), 8)));
        assert!(seen.contains(&DynSolValue::Uint(U256::from(254), 8)));
        assert!(seen.iter().all(|v| matches!(v, DynSolValue::Uint(x, 8) if *x <= U256::from(255))));
    }

    #[test]
    fn signed_values_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let max = I256::try_from(127).unwrap();
        let min = I256::try_from(-128).unwrap();
        for r in 0..300 {
            let DynSolValue::Int(v, 8) = arbitrary(&DynSolType::Int(8), &mut rng, r, 0) else { panic!() };
            assert!(v >= min && v <= max, "{v}");
        }
    }

    #[test]
    fn function_typed_parameters_are_skipped() {
        let abi = json!([{ "type": "function", "name": "g", "inputs": [{ "name": "cb", "type": "function" }],
                           "outputs": [], "stateMutability": "nonpayable" }]);
        let p = plan_calls(&abi, 1, 2).unwrap();
        assert!(p.calls.is_empty());
        assert_eq!(p.skipped.len(), 1);
    }

    fn artifact(deploy: Vec<u8>) -> CompiledArtifact {
        CompiledArtifact {
            config: crate::compile::CompileConfig::baseline(std::path::Path::new("solc")),
            contract_name: "T".into(),
            deploy_bytecode: HexBytes(deploy),
            runtime_bytecode: HexBytes(Vec::new()),
            abi: json!([]),
            solc_version: "test".into(),
            diagnostics: Vec::new(),
        }
    }

    /// Init code that returns `runtime` as the deployed code.
    fn init_code(runtime: &[u8]) -> Vec<u8> {
        let n = runtime.len() as u8;
        // PUSH1 n PUSH1 12 PUSH1 0 CODECOPY PUSH1 n PUSH1 0 RETURN
        let mut code = vec![0x60, n, 0x60, 12, 0x60, 0, 0x39, 0x60, n, 0x60, 0, 0xf3];
        code.extend_from_slice(runtime);
        code
    }

    #[test]
    fn handwritten_contract_returns_five_and_stores() {
        // SSTORE(0, 1); MSTORE(0, 5); RETURN(0, 32)
        let runtime = [0x60, 1, 0x60, 0, 0x55, 0x60, 5, 0x60, 0, 0x52, 0x60, 32, 0x60, 0, 0xf3];
        let plan = plan_calls(&abi_f_uint(), 1, 2).unwrap();
        let t = run(&artifact(init_code(&runtime)), &plan).unwrap();
        assert!(t.deployed());
        assert_eq!(t.calls.len(), 2);
        let mut five = [0u8; 32];
        five[31] = 5;
        assert_eq!(t.calls[0].return_data.0, five.to_vec());
        assert_eq!(t.calls[0].storage_digest, t.calls[1].storage_digest);
        assert_eq!(t, run(&artifact(init_code(&runtime)), &plan).unwrap());
    }

    #[test]
    fn reverting_constructor_yields_no_calls() {
        // REVERT(0, 0)
        let plan = plan_calls(&abi_f_uint(), 1, 2).unwrap();
        let t = run(&artifact(vec![0x60, 0, 0x60, 0, 0xfd]), &plan).unwrap();
        assert_eq!(t.deploy.status, Status::Revert);
        assert!(t.calls.is_empty());
    }

    #[test]
    fn infinite_loop_is_out_of_gas() {
        // JUMPDEST PUSH1 0 JUMP
        let runtime = [0x5b, 0x60, 0, 0x56];
        let plan = plan_calls(&abi_f_uint(), 1, 1).unwrap();
        let t = run(&artifact(init_code(&runtime)), &plan).unwrap();
        assert_eq!(t.calls[0].status, Status::OutOfGas);
    }
}
