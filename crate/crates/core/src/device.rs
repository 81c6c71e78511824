//! Simulated device memory space.
//!
//! Device allocations are only reachable through opaque [`DeviceBuffer`]
//! handles; data moves between host and device exclusively by explicit,
//! deep copies. Every allocation is accounted against a fixed capacity.

use std::any::Any;
use std::collections::HashMap;
use std::ops::{Deref, DerefMut};
use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Error, Result};
use crate::scalar::{DeviceElem, ElemKind};

/// Default device capacity: 1 GiB.
pub const DEFAULT_CAPACITY_BYTES: usize = 1 << 30;

/// Handle to an allocation in device memory.
///
/// The handle is a plain value, like a device pointer: it stays valid to
/// hold after [`Device::free`], but any operation through it then fails
/// with [`Error::UseAfterFree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeviceBuffer {
    id: u64,
    len: usize,
    kind: ElemKind,
}

impl DeviceBuffer {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> ElemKind {
        self.kind
    }

    pub fn size_bytes(&self) -> usize {
        self.len * self.kind.width()
    }
}

/// Host-side element array.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HostBuffer<E> {
    data: Vec<E>,
}

impl<E: DeviceElem> HostBuffer<E> {
    pub fn from_vec(data: Vec<E>) -> Self {
        HostBuffer { data }
    }

    pub fn filled(len: usize, value: E) -> Self {
        HostBuffer {
            data: vec![value; len],
        }
    }

    pub fn kind(&self) -> ElemKind {
        E::KIND
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }
}

impl<E> Deref for HostBuffer<E> {
    type Target = [E];
    fn deref(&self) -> &[E] {
        &self.data
    }
}

impl<E> DerefMut for HostBuffer<E> {
    fn deref_mut(&mut self) -> &mut [E] {
        &mut self.data
    }
}

impl<E> From<Vec<E>> for HostBuffer<E> {
    fn from(data: Vec<E>) -> Self {
        HostBuffer { data }
    }
}

pub(crate) type Storage = Arc<dyn Any + Send + Sync>;

struct Entry {
    len: usize,
    kind: ElemKind,
    storage: Storage,
}

struct Table {
    live: HashMap<u64, Entry>,
    next_id: u64,
    in_use: usize,
    allocated_total: usize,
    freed_total: usize,
}

/// A simulated device memory space.
pub struct Device {
    capacity: usize,
    table: Mutex<Table>,
}

impl Default for Device {
    fn default() -> Self {
        Device::new()
    }
}

impl std::fmt::Debug for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.lock();
        f.debug_struct("Device")
            .field("capacity", &self.capacity)
            .field("in_use", &t.in_use)
            .field("live_buffers", &t.live.len())
            .finish()
    }
}

impl Device {
    pub fn new() -> Self {
        Device::with_capacity(DEFAULT_CAPACITY_BYTES)
    }

    pub fn with_capacity(capacity_bytes: usize) -> Self {
        Device {
            capacity: capacity_bytes,
            table: Mutex::new(Table {
                live: HashMap::new(),
                next_id: 1,
                in_use: 0,
                allocated_total: 0,
                freed_total: 0,
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Table> {
        self.table.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Bytes currently held by live buffers.
    pub fn bytes_in_use(&self) -> usize {
        self.lock().in_use
    }

    /// Lifetime (allocated, freed) byte totals.
    pub fn totals(&self) -> (usize, usize) {
        let t = self.lock();
        (t.allocated_total, t.freed_total)
    }

    pub fn live_buffers(&self) -> usize {
        self.lock().live.len()
    }

    pub fn is_live(&self, buf: &DeviceBuffer) -> bool {
        self.lock().live.contains_key(&buf.id)
    }

    /// Allocates `len` zero-initialized elements of type `E`.
    pub fn alloc<E: DeviceElem>(&self, len: usize) -> Result<DeviceBuffer> {
        let bytes = len
            .checked_mul(E::KIND.width())
            .ok_or(Error::CapacityExceeded {
                requested: usize::MAX,
                in_use: 0,
                capacity: self.capacity,
            })?;
        let mut t = self.lock();
        if bytes > self.capacity - t.in_use {
            return Err(Error::CapacityExceeded {
                requested: bytes,
                in_use: t.in_use,
                capacity: self.capacity,
            });
        }
        let storage: Storage = Arc::new(E::zeroed_cells(len));
        let id = t.next_id;
        t.next_id += 1;
        t.in_use += bytes;
        t.allocated_total += bytes;
        t.live.insert(
            id,
            Entry {
                len,
                kind: E::KIND,
                storage,
            },
        );
        Ok(DeviceBuffer {
            id,
            len,
            kind: E::KIND,
        })
    }

    /// Allocates a buffer of the runtime element kind `kind`.
    pub fn alloc_kind(&self, len: usize, kind: ElemKind) -> Result<DeviceBuffer> {
        match kind {
            ElemKind::F32 => self.alloc::<f32>(len),
            ElemKind::F64 => self.alloc::<f64>(len),
            ElemKind::U32 => self.alloc::<u32>(len),
        }
    }

    pub fn free(&self, buf: DeviceBuffer) -> Result<()> {
        let mut t = self.lock();
        let entry = t
            .live
            .remove(&buf.id)
            .ok_or(Error::UseAfterFree { id: buf.id })?;
        let bytes = entry.len * entry.kind.width();
        t.in_use -= bytes;
        t.freed_total += bytes;
        Ok(())
    }

    /// Looks up the storage behind a live handle.
    pub(crate) fn storage(&self, buf: &DeviceBuffer) -> Result<(ElemKind, Storage)> {
        let t = self.lock();
        let entry = t
            .live
            .get(&buf.id)
            .ok_or(Error::UseAfterFree { id: buf.id })?;
        Ok((entry.kind, Arc::clone(&entry.storage)))
    }

    fn typed_storage<E: DeviceElem>(&self, buf: &DeviceBuffer, len: usize) -> Result<Storage> {
        let (kind, storage) = self.storage(buf)?;
        if kind != E::KIND {
            return Err(Error::KindMismatch {
                expected: kind,
                found: E::KIND,
            });
        }
        if buf.len != len {
            return Err(Error::LengthMismatch {
                expected: buf.len,
                found: len,
            });
        }
        Ok(storage)
    }

    /// Copies host data into a device buffer of the same kind and length.
    pub fn copy_host_to_device<E: DeviceElem>(&self, src: &[E], dst: &DeviceBuffer) -> Result<()> {
        let storage = self.typed_storage::<E>(dst, src.len())?;
        let cells = cells_of::<E>(&storage);
        for (cell, &v) in cells.iter().zip(src) {
            E::store(cell, v);
        }
        Ok(())
    }

    /// Copies a device buffer back into host memory of the same kind and length.
    pub fn copy_device_to_host<E: DeviceElem>(&self, src: &DeviceBuffer, dst: &mut [E]) -> Result<()> {
        let storage = self.typed_storage::<E>(src, dst.len())?;
        let cells = cells_of::<E>(&storage);
        for (out, cell) in dst.iter_mut().zip(cells.iter()) {
            *out = E::load(cell);
        }
        Ok(())
    }

    /// Device-to-device copy between buffers of the same kind and length.
    pub fn copy_device_to_device(&self, src: &DeviceBuffer, dst: &DeviceBuffer) -> Result<()> {
        if src.kind != dst.kind {
            return Err(Error::KindMismatch {
                expected: dst.kind,
                found: src.kind,
            });
        }
        match src.kind {
            ElemKind::F32 => self.d2d::<f32>(src, dst),
            ElemKind::F64 => self.d2d::<f64>(src, dst),
            ElemKind::U32 => self.d2d::<u32>(src, dst),
        }
    }

    fn d2d<E: DeviceElem>(&self, src: &DeviceBuffer, dst: &DeviceBuffer) -> Result<()> {
        let s = self.typed_storage::<E>(src, src.len)?;
        let d = self.typed_storage::<E>(dst, src.len)?;
        for (o, i) in cells_of::<E>(&d).iter().zip(cells_of::<E>(&s).iter()) {
            E::store(o, E::load(i));
        }
        Ok(())
    }

    /// Allocates a buffer and fills it from host data.
    pub fn upload<E: DeviceElem>(&self, src: &[E]) -> Result<DeviceBuffer> {
        let buf = self.alloc::<E>(src.len())?;
        self.copy_host_to_device(src, &buf)?;
        Ok(buf)
    }

    /// Reads a whole device buffer into a fresh host vector.
    pub fn download<E: DeviceElem>(&self, src: &DeviceBuffer) -> Result<Vec<E>> {
        let mut out = vec![E::default(); src.len];
        self.copy_device_to_host(src, &mut out)?;
        Ok(out)
    }

    // OpenCL vocabulary for the same operations.

    /// Alias of [`Device::alloc`].
    pub fn create_buffer<E: DeviceElem>(&self, len: usize) -> Result<DeviceBuffer> {
        self.alloc::<E>(len)
    }

    /// Alias of [`Device::copy_host_to_device`].
    pub fn enqueue_write_buffer<E: DeviceElem>(&self, src: &[E], dst: &DeviceBuffer) -> Result<()> {
        self.copy_host_to_device(src, dst)
    }

    /// Alias of [`Device::copy_device_to_host`].
    pub fn enqueue_read_buffer<E: DeviceElem>(&self, src: &DeviceBuffer, dst: &mut [E]) -> Result<()> {
        self.copy_device_to_host(src, dst)
    }

    /// Alias of [`Device::free`].
    pub fn release_mem_object(&self, buf: DeviceBuffer) -> Result<()> {
        self.free(buf)
    }
}

pub(crate) fn cells_of<E: DeviceElem>(storage: &Storage) -> &[E::Cell] {
    storage
        .downcast_ref::<Box<[E::Cell]>>()
        .expect("storage kind checked before access")
}
