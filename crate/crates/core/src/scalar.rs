//! Element types that can live in simulated device memory.
//!
//! Floating-point work is generic over [`Scalar`] (`f32` or `f64`). Sparse
//! structure arrays additionally need a 32-bit index element, so device
//! buffers are typed by the wider [`DeviceElem`].

use std::fmt;
use std::iter::Sum;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Runtime tag of a device buffer's element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemKind {
    /// IEEE-754 binary32.
    F32,
    /// IEEE-754 binary64.
    F64,
    /// Unsigned 32-bit index, used for sparse structure arrays.
    U32,
}

impl ElemKind {
    /// Width of one element in bytes.
    pub const fn width(self) -> usize {
        match self {
            ElemKind::F32 | ElemKind::U32 => 4,
            ElemKind::F64 => 8,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ElemKind::F32 => "f32",
            ElemKind::F64 => "f64",
            ElemKind::U32 => "u32",
        }
    }
}

impl fmt::Display for ElemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A plain element that can be stored in device memory.
///
/// Device storage is an array of atomic words so blocks running on different
/// workers can share global buffers without `unsafe`; all accesses are
/// relaxed, ordering between phases and launches comes from the executor.
pub trait DeviceElem: Copy + Default + Send + Sync + fmt::Debug + PartialEq + 'static {
    const KIND: ElemKind;
    type Cell: Send + Sync + 'static;

    fn zeroed_cells(len: usize) -> Box<[Self::Cell]>;
    fn load(cell: &Self::Cell) -> Self;
    fn store(cell: &Self::Cell, value: Self);
    /// Raw bit pattern, widened to 64 bits.
    fn bits(self) -> u64;
}

impl DeviceElem for f32 {
    const KIND: ElemKind = ElemKind::F32;
    type Cell = AtomicU32;

    fn zeroed_cells(len: usize) -> Box<[AtomicU32]> {
        (0..len).map(|_| AtomicU32::new(0)).collect()
    }
    #[inline]
    fn load(cell: &AtomicU32) -> f32 {
        f32::from_bits(cell.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(cell: &AtomicU32, value: f32) {
        cell.store(value.to_bits(), Ordering::Relaxed)
    }
    fn bits(self) -> u64 {
        self.to_bits() as u64
    }
}

impl DeviceElem for f64 {
    const KIND: ElemKind = ElemKind::F64;
    type Cell = AtomicU64;

    fn zeroed_cells(len: usize) -> Box<[AtomicU64]> {
        (0..len).map(|_| AtomicU64::new(0)).collect()
    }
    #[inline]
    fn load(cell: &AtomicU64) -> f64 {
        f64::from_bits(cell.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(cell: &AtomicU64, value: f64) {
        cell.store(value.to_bits(), Ordering::Relaxed)
    }
    fn bits(self) -> u64 {
        self.to_bits()
    }
}

impl DeviceElem for u32 {
    const KIND: ElemKind = ElemKind::U32;
    type Cell = AtomicU32;

    fn zeroed_cells(len: usize) -> Box<[AtomicU32]> {
        (0..len).map(|_| AtomicU32::new(0)).collect()
    }
    #[inline]
    fn load(cell: &AtomicU32) -> u32 {
        cell.load(Ordering::Relaxed)
    }
    #[inline]
    fn store(cell: &AtomicU32, value: u32) {
        cell.store(value, Ordering::Relaxed)
    }
    fn bits(self) -> u64 {
        self as u64
    }
}

/// Floating-point element: `f32` or `f64`.
pub trait Scalar:
    DeviceElem + Float + FromPrimitive + ToPrimitive + Sum + fmt::Display + fmt::LowerExp
{
    /// Magnitude below which a Krylov recurrence denominator counts as zero.
    fn breakdown_threshold() -> Self;

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion from f64")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float to f64")
    }
}

impl Scalar for f32 {
    fn breakdown_threshold() -> f32 {
        1e-20
    }
}

impl Scalar for f64 {
    fn breakdown_threshold() -> f64 {
        1e-30
    }
}

/// `true` if the two slices hold the same bit patterns.
pub fn bit_identical<E: DeviceElem>(a: &[E], b: &[E]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bits() == y.bits())
}
