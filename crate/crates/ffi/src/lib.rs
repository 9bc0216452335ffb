//! C interface to the synsrl tagger, scorer and feature extractor.
//!
//! Every fallible function returns a [`SynsrlStatus`]. On failure the
//! message is kept per thread and can be read with
//! [`synsrl_last_error`]. Strings returned through `out` pointers are
//! owned by the caller and must be released with [`synsrl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use synsrl::analysis::evaluate;
use synsrl::cli::{exit_code, feature_table, parse_predicate_column, predict_corpus, unlabeled_instances, EXIT_CONFIG};
use synsrl::model::SrlModel;
use synsrl::syntax::SyntaxMode;
use synsrl::treebank::{parse_conllx, parse_props, write_props, PredicateFrame, PropsBlock};
use synsrl::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynsrlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed or inconsistent input data.
    DataError = 3,
    /// Bad settings, unknown mode, or a model that does not fit.
    ConfigError = 4,
    /// Any other failure, including a caught panic.
    InternalError = 5,
}

/// A loaded model. Create with [`synsrl_model_load`], release with
/// [`synsrl_model_free`].
pub struct SynsrlModel {
    inner: SrlModel,
}

/// Span-level scores; precision, recall and f1 are percentages and comp
/// is the fraction of predicates tagged perfectly.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SynsrlScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub comp: f64,
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SynsrlStatus {
    match exit_code(e) {
        2 => SynsrlStatus::DataError,
        EXIT_CONFIG => SynsrlStatus::ConfigError,
        _ => SynsrlStatus::InternalError,
    }
}

struct Failure(SynsrlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, turning errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SynsrlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SynsrlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside synsrl".into());
            SynsrlStatus::InternalError
        }
    }
}

/// # Safety
/// `s` must be null or point to a nul-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(SynsrlStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(SynsrlStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn out_arg<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(SynsrlStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(SynsrlStatus::InternalError, "output contains a nul byte".into()))
}

/// Message of the last failed call on this thread, or null if the last
/// call succeeded. Valid until the next synsrl call on the same thread.
#[no_mangle]
pub extern "C" fn synsrl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn synsrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint written by `synsrl train`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synsrl_model_load(path: *const c_char, out: *mut *mut SynsrlModel) -> SynsrlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = SrlModel::load(std::path::Path::new(path))?;
        *out = Box::into_raw(Box::new(SynsrlModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or come from [`synsrl_model_load`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn synsrl_model_free(model: *mut SynsrlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Tags every predicate marked in the first column of `predicates`
/// (CoNLL-2005 props layout) over the trees in `conllx`, and returns the
/// predicted props text in `out`.
///
/// # Safety
/// `model` must come from [`synsrl_model_load`]; the strings must be
/// nul-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synsrl_model_predict(
    model: *const SynsrlModel,
    conllx: *const c_char,
    predicates: *const c_char,
    out: *mut *mut c_char,
) -> SynsrlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(SynsrlStatus::NullArgument, "model is null".into()))?;
        let trees = parse_conllx(str_arg(conllx, "conllx")?)?;
        let lemmas = parse_predicate_column(str_arg(predicates, "predicates")?);
        let corpus = unlabeled_instances(trees, &lemmas)?;
        let frames = predict_corpus(&[&model.inner], &corpus)?;
        let blocks = frames
            .into_iter()
            .zip(lemmas)
            .map(|(f, l)| PropsBlock::new(l, f))
            .collect::<Result<Vec<_>, _>>()?;
        *out = into_c_string(write_props(&blocks)?)?;
        Ok(())
    })
}

fn frames_of(text: &str) -> Result<Vec<Vec<PredicateFrame>>, Error> {
    Ok(parse_props(text)?.into_iter().map(|b| b.frames).collect())
}

/// Scores predicted props text against gold props text.
///
/// # Safety
/// The strings must be nul-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synsrl_evaluate(
    gold: *const c_char,
    pred: *const c_char,
    out: *mut SynsrlScores,
) -> SynsrlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let gold = frames_of(str_arg(gold, "gold")?)?;
        let pred = frames_of(str_arg(pred, "pred")?)?;
        let r = evaluate(&gold, &pred)?;
        *out = SynsrlScores {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            comp: r.comp,
            correct: r.counts.correct as u64,
            predicted: r.counts.predicted as u64,
            gold: r.counts.gold as u64,
        };
        Ok(())
    })
}

/// Tab-separated tree features (`mode` is "sdp", "tpf" or "pe") for each
/// token and each predicate marked in `predicates`, or for every token
/// pair when `predicates` is null. `clip` bounds TPF distances.
///
/// # Safety
/// `conllx` and `mode` must be nul-terminated; `predicates` must be null
/// or nul-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synsrl_features(
    conllx: *const c_char,
    predicates: *const c_char,
    mode: *const c_char,
    clip: u32,
    out: *mut *mut c_char,
) -> SynsrlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let trees = parse_conllx(str_arg(conllx, "conllx")?)?;
        let mode: SyntaxMode = str_arg(mode, "mode")?.parse()?;
        if !matches!(mode, SyntaxMode::Sdp | SyntaxMode::Tpf | SyntaxMode::Pe) {
            return Err(Failure(
                SynsrlStatus::ConfigError,
                format!("features mode must be sdp, tpf or pe, not {mode}"),
            ));
        }
        let preds: Vec<Vec<usize>> = if predicates.is_null() {
            trees.iter().map(|(s, _)| (0..s.len()).collect()).collect()
        } else {
            let lemmas = parse_predicate_column(str_arg(predicates, "predicates")?);
            if lemmas.len() != trees.len() || lemmas.iter().zip(&trees).any(|(l, (s, _))| l.len() != s.len()) {
                return Err(Failure(
                    SynsrlStatus::DataError,
                    "predicate column does not match the trees".into(),
                ));
            }
            lemmas.iter().map(|l| synsrl::cli::predicate_positions(l)).collect()
        };
        *out = into_c_string(feature_table(&trees, &preds, mode, clip as usize))?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned through an `out` argument of
/// this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn synsrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
