//! On-disk persistence: records in a redb key-value file, images as
//! content-addressed PNG files under `images/`.

use std::path::{Path, PathBuf};

use redb::{Database, ReadableTable, TableDefinition};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sico_core::{raster, RgbImage};

const SESSIONS: TableDefinition<&str, &[u8]> = TableDefinition::new("sessions");
const JOBS: TableDefinition<&str, &[u8]> = TableDefinition::new("jobs");
const RESULTS: TableDefinition<&str, &[u8]> = TableDefinition::new("results");
const CATALOG: TableDefinition<&str, &[u8]> = TableDefinition::new("catalog");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Sessions,
    Jobs,
    Results,
    Catalog,
}

impl Table {
    fn def(self) -> TableDefinition<'static, &'static str, &'static [u8]> {
        match self {
            Table::Sessions => SESSIONS,
            Table::Jobs => JOBS,
            Table::Results => RESULTS,
            Table::Catalog => CATALOG,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store: {0}")]
    Db(Box<redb::Error>),
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("store record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("store image: {0}")]
    Image(#[from] sico_core::Error),
}

impl From<redb::Error> for StoreError {
    fn from(e: redb::Error) -> Self {
        StoreError::Db(Box::new(e))
    }
}

macro_rules! impl_db_from {
    ($($t:ty),*) => {$(
        impl From<$t> for StoreError {
            fn from(e: $t) -> Self {
                StoreError::Db(Box::new(e.into()))
            }
        }
    )*};
}
impl_db_from!(
    redb::DatabaseError,
    redb::TransactionError,
    redb::TableError,
    redb::StorageError,
    redb::CommitError
);

impl From<StoreError> for crate::error::ApiError {
    fn from(e: StoreError) -> Self {
        crate::error::ApiError::Internal(e.to_string())
    }
}

pub struct Store {
    db: Database,
    image_dir: PathBuf,
}

impl Store {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let data_dir = data_dir.as_ref();
        let image_dir = data_dir.join("images");
        std::fs::create_dir_all(&image_dir)?;
        let db = Database::create(data_dir.join("sico.redb"))?;
        let tx = db.begin_write()?;
        for t in [Table::Sessions, Table::Jobs, Table::Results, Table::Catalog] {
            tx.open_table(t.def())?;
        }
        tx.commit()?;
        Ok(Self { db, image_dir })
    }

    pub fn put<T: Serialize>(&self, table: Table, key: &str, value: &T) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec(value)?;
        let tx = self.db.begin_write()?;
        tx.open_table(table.def())?.insert(key, bytes.as_slice())?;
        tx.commit()?;
        Ok(())
    }

    pub fn get<T: DeserializeOwned>(
        &self,
        table: Table,
        key: &str,
    ) -> Result<Option<T>, StoreError> {
        let tx = self.db.begin_read()?;
        let t = tx.open_table(table.def())?;
        match t.get(key)? {
            Some(v) => Ok(Some(serde_json::from_slice(v.value())?)),
            None => Ok(None),
        }
    }

    pub fn remove(&self, table: Table, key: &str) -> Result<(), StoreError> {
        let tx = self.db.begin_write()?;
        tx.open_table(table.def())?.remove(key)?;
        tx.commit()?;
        Ok(())
    }

    pub fn all<T: DeserializeOwned>(&self, table: Table) -> Result<Vec<(String, T)>, StoreError> {
        let tx = self.db.begin_read()?;
        let t = tx.open_table(table.def())?;
        let mut out = Vec::new();
        for entry in t.iter()? {
            let (k, v) = entry?;
            out.push((k.value().to_string(), serde_json::from_slice(v.value())?));
        }
        Ok(out)
    }

    /// Stores `img` losslessly and returns its id (the pixel content hash).
    pub fn put_image(&self, img: &RgbImage) -> Result<String, StoreError> {
        let id = raster::content_hash(img);
        let path = self.image_path(&id);
        if !path.exists() {
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            std::fs::write(&tmp, raster::encode_png(img))?;
            std::fs::rename(&tmp, &path)?;
        }
        Ok(id)
    }

    /// Raw PNG bytes for an image id, if present.
    pub fn image_bytes(&self, id: &str) -> Result<Option<Vec<u8>>, StoreError> {
        if !is_image_id(id) {
            return Ok(None);
        }
        match std::fs::read(self.image_path(id)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load_image(&self, id: &str) -> Result<Option<RgbImage>, StoreError> {
        match self.image_bytes(id)? {
            Some(b) => Ok(Some(raster::decode_image(&b)?)),
            None => Ok(None),
        }
    }

    fn image_path(&self, id: &str) -> PathBuf {
        self.image_dir.join(format!("{id}.png"))
    }
}

fn is_image_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_hexdigit())
}
